"""Exact measures of Bad sets and the digit-by-digit selection algorithm.

Bad(lam, k, j, eps) depends only on the first floor(lam 2**k) + k digits,
so it is a finite union of cylinders and its measure is an exact
fraction. Bad_k unions these over j and over the rationals p/q < k with
q <= k. The algorithm then picks digits one at a time, always keeping
enough of the good set E inside the current interval.

Run: python3 demos/04_exact_measure.py   (Bad_3 takes a few seconds)
"""

from fractions import Fraction

from pgeneric import AlgorithmConfig, BadSpec, ResourceCapError, bad_k, bad_set, run_algorithm
from pgeneric.measure import check_fact1_bound, lambda_set

print("Bad(1, 2, j, eps) in base 2")
for eps in (Fraction(1, 2), Fraction(1, 10)):
    row = [str(bad_set(BadSpec(2, Fraction(1), 2, j, eps)).measure()) for j in range(4)]
    print(f"  eps={eps}: " + ", ".join(row))

for k in (1, 2, 3):
    lams = ", ".join(map(str, lambda_set(k))) or "none"
    s = bad_k(2, k)
    print(f"Bad_{k}: lambdas {{{lams}}}\n   measure {s.measure()} ~ {float(s.measure()):.4f}, "
          f"{len(s)} ranges at level {s.level}")

for k in (2, 3):
    r = check_fact1_bound(2, k)
    print(f"closed-form bound at k={k}: {r.bound:.3g} vs {float(r.measure):.4f} -> {r.status}")

config = AlgorithmConfig(base=2, n0=0, steps=8, k_ranges=((2, 3), (3, 4)))
result = run_algorithm(config)
print("\nstep  digit  mu(I_n & E)      threshold")
for rec in result.trace:
    print(f"{rec.n:>4}  {rec.chosen_digit:>5}  {float(rec.measure):.3e}  {float(rec.threshold):.3e}")
print("digits:", "".join(map(str, result.digits)))

try:
    run_algorithm(AlgorithmConfig.square(base=2, n0=0, steps=1))
except ResourceCapError as exc:
    print("\nN_n = 2**(2n) schedule refused:", exc)
