"""Z-profiles of digit prefixes and their distance to the Poisson law.

For a word length k and intensity lambda, ``Z_j`` is the fraction of the
``b**k`` words that occur exactly j times among the first windows of the
stream. Two window counts are supported:

* convention ``"A"``: ``floor(lambda * b**k) + 1`` windows, every window
  inside the prefix of length ``floor(lambda * b**k) + k``;
* convention ``"B"``: ``floor(lambda * b**k)`` windows, i.e. window starts
  ``p`` with ``0 < p <= lambda * b**k``.

Z values are exact fractions; comparisons against the Poisson pmf happen in
double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats as sps

from .digits import DigitBuffer
from .errors import PreconditionError
from .words import (
    WindowSpec,
    check_word_length,
    count_occurrences,
    count_words,
    histogram,
    window_codes,
)

DEFAULT_J_MAX = 64
CONVENTIONS = ("A", "B")


def as_lambda(value) -> Fraction:
    """Coerce ``value`` (int, Fraction, "p/q" string or float) to a positive Fraction."""
    if isinstance(value, float):
        value = Fraction(repr(value))
    lam = Fraction(value)
    if lam <= 0:
        raise PreconditionError(f"lambda must be positive, got {lam}")
    return lam


def window_count(base: int, k: int, lam, convention: str = "A") -> int:
    if convention not in CONVENTIONS:
        raise PreconditionError(f"convention must be 'A' or 'B', got {convention!r}")
    lam = as_lambda(lam)
    w = (lam.numerator * base**k) // lam.denominator
    return w + 1 if convention == "A" else w


def poisson_pmf(lam, j: int) -> float:
    """``exp(-lam) * lam**j / j!`` evaluated in log space."""
    lam = float(lam)
    if lam <= 0 or j < 0:
        raise PreconditionError("need lam > 0 and j >= 0")
    return math.exp(-lam + j * math.log(lam) - math.lgamma(j + 1))


@dataclass(frozen=True)
class PoissonRef:
    lam: Fraction
    pmf: np.ndarray

    @classmethod
    def build(cls, lam, j_max: int = DEFAULT_J_MAX) -> "PoissonRef":
        lam = as_lambda(lam)
        pmf = np.array([poisson_pmf(lam, j) for j in range(j_max + 1)])
        pmf.setflags(write=False)
        return cls(lam, pmf)


@dataclass(frozen=True)
class ZProfile:
    base: int
    k: int
    lam: Fraction
    convention: str
    window_count: int
    counts: np.ndarray  # N_j, number of words seen exactly j times
    above: int  # words seen more than j_max times

    @property
    def j_max(self) -> int:
        return self.counts.size - 1

    @property
    def denominator(self) -> int:
        return self.base**self.k

    @property
    def z(self) -> list[Fraction]:
        d = self.denominator
        return [Fraction(int(n), d) for n in self.counts]

    @property
    def z_above(self) -> Fraction:
        return Fraction(self.above, self.denominator)

    def z_float(self) -> np.ndarray:
        return self.counts / float(self.denominator)

    def __getitem__(self, j: int) -> Fraction:
        if j > self.j_max:
            raise IndexError(f"j={j} beyond j_max={self.j_max}")
        return Fraction(int(self.counts[j]), self.denominator)

    @property
    def distinct_fraction(self) -> Fraction:
        """Fraction of words that occur at least once, ``1 - Z_0``."""
        return 1 - self[0]


def z_profile(
    buffer: DigitBuffer,
    k: int,
    lam,
    j_max: int = DEFAULT_J_MAX,
    convention: str = "A",
    *,
    threads: int = 1,
) -> ZProfile:
    lam = as_lambda(lam)
    check_word_length(buffer.base, k)
    w = window_count(buffer.base, k, lam, convention)
    spec = WindowSpec(k, 1, w)
    if w and spec.last_digit > len(buffer):
        raise PreconditionError(
            f"need {spec.last_digit} digits for k={k}, lambda={lam}, convention {convention}; "
            f"buffer has {len(buffer)}"
        )
    hist = histogram(count_words(buffer, spec, threads=threads), j_max)
    return ZProfile(buffer.base, k, lam, convention, w, hist.counts, hist.above)


def z_deviation(profile: ZProfile, ref: PoissonRef | None = None) -> tuple[float, float]:
    """``(sup_j |Z_j - pmf_j|, sum_j |Z_j - pmf_j|)`` over ``j <= j_max``."""
    if ref is None:
        ref = PoissonRef.build(profile.lam, profile.j_max)
    if ref.lam != profile.lam:
        raise PreconditionError(f"lambda mismatch: profile {profile.lam}, reference {ref.lam}")
    n = min(profile.j_max, ref.pmf.size - 1) + 1
    diff = np.abs(profile.z_float()[:n] - ref.pmf[:n])
    return float(diff.max()), float(diff.sum())


def per_j_deviation(profile: ZProfile) -> np.ndarray:
    ref = PoissonRef.build(profile.lam, profile.j_max)
    return np.abs(profile.z_float() - ref.pmf)


def distinct_fraction(buffer: DigitBuffer, k: int, n: int) -> Fraction:
    """Fraction of the b**k words occurring in ``x_1 ... x_n``."""
    if n > len(buffer):
        raise PreconditionError(f"n={n} exceeds buffer length {len(buffer)}")
    codes = window_codes(buffer, WindowSpec.prefix(k, n))
    return Fraction(int(np.unique(codes).size), buffer.base**k)


@dataclass(frozen=True)
class NormalityReport:
    n: int
    per_length: tuple[Fraction, ...]  # index l-1 holds the sup over words of length l

    @property
    def sup(self) -> Fraction:
        return max(self.per_length)


def normality_deviation(buffer: DigitBuffer, n: int, max_word_len: int) -> NormalityReport:
    """``max |W(x|n, w)/n - b**-|w||`` over words of each length up to ``max_word_len``.

    W counts overlapping occurrences inside the first n digits and the
    frequency is taken over n, not over the number of windows.
    """
    if n > len(buffer) or n < 1:
        raise PreconditionError(f"n={n} must be in [1, {len(buffer)}]")
    b = buffer.base
    out = []
    for ell in range(1, max_word_len + 1):
        size = b**ell
        counts = count_words(buffer, WindowSpec.prefix(ell, n)).exact_counts() if ell <= n else np.zeros(size, np.int64)
        # |c/n - 1/size| = |c*size - n| / (n*size); the extremes sit at min or max count
        worst = max(abs(int(counts.max()) * size - n), abs(int(counts.min()) * size - n))
        out.append(Fraction(worst, n * size))
    return NormalityReport(n, tuple(out))


@dataclass(frozen=True)
class DiscrepancyReport:
    word: tuple[int, ...]
    n: int
    value: Fraction


def discrepancy(buffer: DigitBuffer, word: Sequence[int], n: int) -> DiscrepancyReport:
    """``|n / b**|w| - W(x|n, w)|``."""
    word = tuple(int(d) for d in word)
    if not 1 <= len(word) <= n <= len(buffer):
        raise PreconditionError(f"need 1 <= |w| <= n <= buffer length, got |w|={len(word)}, n={n}")
    w = count_occurrences(buffer, word, n)
    return DiscrepancyReport(word, n, abs(Fraction(n, buffer.base ** len(word)) - w))


def f_large_holds(buffer: DigitBuffer, f, word: Sequence[int], ns: Iterable[int]) -> bool:
    """Whether ``D(x, w, n) > f(w, n)`` for every n in ``ns``."""
    word = tuple(word)
    return all(discrepancy(buffer, word, n).value > f(word, n) for n in ns)


def weakly_poisson_scan(
    buffer: DigitBuffer,
    lam,
    j: int,
    epsilon: float,
    k_range: Iterable[int],
    convention: str = "A",
) -> list[int]:
    """The k in ``k_range`` with ``|Z_{j,k} - pmf_j| < epsilon``."""
    lam = as_lambda(lam)
    target = poisson_pmf(lam, j)
    hits = []
    for k in k_range:
        prof = z_profile(buffer, k, lam, j_max=max(j, 1), convention=convention)
        if abs(float(prof[j]) - target) < epsilon:
            hits.append(k)
    return hits


def count_distribution(buffer: DigitBuffer, k: int, lam_lo, lam_hi) -> dict[int, Fraction]:
    """Distribution of the number of occurrences of a uniformly chosen k-word
    over window starts ``p`` with ``lam_lo * b**k < p <= lam_hi * b**k``.

    ``lam_lo`` may be 0; the result maps j to the fraction of words with
    exactly j such occurrences.
    """
    lo = Fraction(lam_lo)
    hi = Fraction(lam_hi)
    if lo < 0 or hi < lo:
        raise PreconditionError(f"need 0 <= lam_lo <= lam_hi, got ({lo}, {hi}]")
    size = check_word_length(buffer.base, k)
    first = (lo.numerator * size) // lo.denominator + 1
    last = (hi.numerator * size) // hi.denominator
    count = max(0, last - first + 1)
    if count == 0:
        return {0: Fraction(1)}
    spec = WindowSpec(k, first, count)
    table = count_words(buffer, spec)
    occ = table.exact_counts() if table.representation == "dense" else None
    if occ is None:
        bins = np.bincount(table.counts)
        bins[0] += table.absent
    else:
        bins = np.bincount(occ)
    return {j: Fraction(int(c), size) for j, c in enumerate(bins) if c}


def _as_pmf_dict(dist) -> dict[int, float]:
    if isinstance(dist, Mapping):
        return {int(j): float(p) for j, p in dist.items()}
    return {j: float(p) for j, p in enumerate(dist)}


def tv_distance(dist1, dist2) -> float:
    """Total variation distance between two laws on the non-negative integers.

    Accepts mappings ``j -> p`` or sequences indexed by j. Mass missing from
    an input (a truncated pmf) is treated as disjoint from the other law, so
    the result is an upper bound in that case.
    """
    p = _as_pmf_dict(dist1)
    q = _as_pmf_dict(dist2)
    support = set(p) | set(q)
    l1 = sum(abs(p.get(j, 0.0) - q.get(j, 0.0)) for j in support)
    tails = max(0.0, 1.0 - sum(p.values())) + max(0.0, 1.0 - sum(q.values()))
    return min(1.0, 0.5 * (l1 + tails))


def poisson_cutoff(lam: float, tail: float = 1e-12) -> int:
    """Smallest j with ``P(Po(lam) > j) < tail``."""
    j = int(lam)
    while sps.poisson.sf(j, lam) >= tail:
        j += 1
    return j


def tv_poisson(lam1, lam2, tail: float = 1e-12) -> float:
    """``d_TV(Po(lam1), Po(lam2))`` by direct summation up to both tails < ``tail``."""
    a, b = float(as_lambda(lam1)), float(as_lambda(lam2))
    top = max(poisson_cutoff(a, tail), poisson_cutoff(b, tail))
    return 0.5 * sum(abs(poisson_pmf(a, j) - poisson_pmf(b, j)) for j in range(top + 1))


def poisson_dict(lam, j_max: int | None = None) -> dict[int, float]:
    lam = float(as_lambda(lam))
    top = poisson_cutoff(lam) if j_max is None else j_max
    return {j: poisson_pmf(lam, j) for j in range(top + 1)}
