"""Slow, obviously-correct reference implementations used as test oracles.

Nothing here imports the package's counting, measure or construction code;
each function works from the definitions with plain Python integers.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from fractions import Fraction

MASK = (1 << 64) - 1


def splitmix64_scalar(seed: int, count: int) -> list[int]:
    """Textbook sequential splitmix64."""
    state = seed & MASK
    out = []
    for _ in range(count):
        state = (state + 0x9E3779B97F4A7C15) & MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        out.append(z ^ (z >> 31))
    return out


def random_digits(seed: int, base: int, count: int) -> list[int]:
    return [(w * base) >> 64 for w in splitmix64_scalar(seed, count)]


def to_base(n: int, base: int) -> list[int]:
    out = []
    while n:
        n, d = divmod(n, base)
        out.append(d)
    return out[::-1] or [0]


def champernowne(base: int, count: int) -> list[int]:
    out: list[int] = []
    n = 1
    while len(out) < count:
        out.extend(to_base(n, base))
        n += 1
    return out[:count]


def naive_counts(digits, k: int, first: int = 1, count: int | None = None) -> Counter:
    """Occurrences of each k-word (as a tuple) over window starts first .. first+count-1 (1-based)."""
    digits = [int(d) for d in digits]
    if count is None:
        count = len(digits) - k + 1 - (first - 1)
    c: Counter = Counter()
    for p in range(first, first + count):
        c[tuple(digits[p - 1 : p - 1 + k])] += 1
    return c


def naive_occurrences(digits, word, n: int) -> int:
    digits = [int(d) for d in digits[:n]]
    word = list(word)
    return sum(1 for p in range(n - len(word) + 1) if digits[p : p + len(word)] == word)


def naive_z(digits, base: int, k: int, windows: int) -> dict[int, Fraction]:
    """j -> fraction of the b**k words seen exactly j times in the first ``windows`` windows."""
    c = naive_counts(digits, k, 1, windows)
    hist = Counter(c.values())
    hist[0] += base**k - len(c)
    return {j: Fraction(n, base**k) for j, n in hist.items() if n}


def pmf(lam, j: int) -> float:
    lam = float(lam)
    return math.exp(-lam) * lam**j / math.factorial(j)


def naive_window_count(base: int, k: int, lam: Fraction, convention: str) -> int:
    w = math.floor(lam * base**k)
    return w + 1 if convention == "A" else w


def naive_in_bad(prefix, base: int, lam: Fraction, k: int, j: int, eps: Fraction) -> bool:
    z = naive_z(prefix, base, k, naive_window_count(base, k, lam, "A")).get(j, Fraction(0))
    return abs(float(z) - pmf(lam, j)) > float(eps)


def naive_bad_indices(base: int, lam: Fraction, k: int, j: int, eps: Fraction) -> tuple[int, set[int]]:
    """(level, set of cylinder indices at that level) for Bad(lam, k, j, eps)."""
    level = math.floor(lam * base**k) + k
    idx = set()
    for i, prefix in enumerate(itertools.product(range(base), repeat=level)):
        if naive_in_bad(prefix, base, lam, k, j, eps):
            idx.add(i)
    return level, idx


def lift(indices: set[int], base: int, level: int, to_level: int) -> set[int]:
    """Re-express a set of level cylinders at a finer level."""
    f = base ** (to_level - level)
    return {i * f + r for i in indices for r in range(f)}


def grid_measure(indices: set[int], base: int, level: int) -> Fraction:
    return Fraction(len(indices), base**level)


def naive_lambda_set(k: int) -> set[Fraction]:
    return {Fraction(p, q) for q in range(1, k + 1) for p in range(1, 10 * k * q) if Fraction(p, q) < k}


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def naive_d2_z(v: int) -> int:
    p = 4
    while p < v:
        p *= 2
    return p


def construction_digit(p: int, x, base: int, exps, zfun, flavor: str) -> int:
    """Digit at 1-based position p of f(z) from the block definitions."""
    for i in range(1, len(exps)):
        start, stop = base ** exps[i - 1], base ** exps[i]
        if not start <= p < stop:
            continue
        if flavor in ("boldfast", "light"):
            zi = zfun(i)
            head = ceil_div((zi - 1) * stop, zi)
            return x[p - 1] if p < head else 0
        ze, zo = naive_d2_z(zfun(2 * i)), naive_d2_z(zfun(2 * i + 1))
        head = ceil_div(stop * (ze * zo - zo - ze), ze * zo)
        zero_end = ceil_div(stop * (zo - 1), zo)
        if p < head:
            return x[p - 1]
        if p < zero_end:
            return 0
        return x[start + (p - zero_end) - 1]
    return x[p - 1]
