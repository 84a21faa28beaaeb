"""Exact b-adic interval sets, the sets Bad and E, and the digit-selection
algorithm that walks down nested b-adic intervals.

An :class:`IntervalSet` is stored as sorted, disjoint, non-adjacent integer
ranges ``[s, e)`` at a common level L, standing for the union of
``[s / b**L, e / b**L)``. After every operation the level is lowered as far
as the endpoints allow, which makes the representation a unique normal
form: two sets are equal iff their (level, starts, ends) agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import NoAdmissibleDigit, PreconditionError, ResourceCapError
from .stats import poisson_pmf

DEFAULT_ENUMERATION_CAP = 1 << 24
MAX_LEVEL_VALUE = 1 << 62
ENUM_CHUNK = 1 << 18


@dataclass(frozen=True, order=True)
class BadicInterval:
    """The cylinder ``[index / b**level, (index + 1) / b**level)``."""

    base: int
    level: int
    index: int

    def __post_init__(self):
        if self.level < 0 or not 0 <= self.index < self.base**self.level:
            raise PreconditionError(f"invalid cylinder {self}")

    @property
    def left(self) -> Fraction:
        return Fraction(self.index, self.base**self.level)

    @property
    def measure(self) -> Fraction:
        return Fraction(1, self.base**self.level)

    def child(self, digit: int) -> "BadicInterval":
        return BadicInterval(self.base, self.level + 1, self.index * self.base + digit)

    def digits(self) -> tuple[int, ...]:
        out, a = [], self.index
        for _ in range(self.level):
            a, d = divmod(a, self.base)
            out.append(d)
        return tuple(reversed(out))

    def as_set(self) -> "IntervalSet":
        return IntervalSet(self.base, self.level, [self.index], [self.index + 1])


def _level_limit(base: int) -> int:
    return int(math.floor(math.log(MAX_LEVEL_VALUE, base)))


class IntervalSet:
    """A finite union of b-adic cylinders in [0, 1), in canonical form."""

    __slots__ = ("base", "level", "starts", "ends")

    def __init__(self, base: int, level: int, starts, ends, *, canonical: bool = False):
        if level > _level_limit(base):
            raise ResourceCapError(f"level {level} too deep for exact int64 endpoints in base {base}")
        self.base = base
        s = np.asarray(starts, dtype=np.int64)
        e = np.asarray(ends, dtype=np.int64)
        if not canonical:
            s, e, level = _canonicalize(base, level, s, e)
        s.setflags(write=False)
        e.setflags(write=False)
        self.level, self.starts, self.ends = level, s, e

    # construction -----------------------------------------------------------

    @classmethod
    def empty(cls, base: int) -> "IntervalSet":
        return cls(base, 0, [], [], canonical=True)

    @classmethod
    def full(cls, base: int) -> "IntervalSet":
        return cls(base, 0, [0], [1], canonical=True)

    @classmethod
    def from_cylinders(cls, base: int, cylinders: Iterable[BadicInterval]) -> "IntervalSet":
        cyl = list(cylinders)
        if not cyl:
            return cls.empty(base)
        if any(c.base != base for c in cyl):
            raise PreconditionError("mixed bases")
        level = max(c.level for c in cyl)
        s = np.array([c.index * base ** (level - c.level) for c in cyl], dtype=np.int64)
        e = np.array([(c.index + 1) * base ** (level - c.level) for c in cyl], dtype=np.int64)
        order = np.argsort(s, kind="stable")
        return cls(base, level, *_merge_sorted(s[order], e[order]))

    @classmethod
    def from_mask(cls, base: int, level: int, mask: np.ndarray) -> "IntervalSet":
        """The union of level-L cylinders ``a`` with ``mask[a]`` true."""
        mask = np.asarray(mask, dtype=bool)
        if mask.size != base**level:
            raise PreconditionError(f"mask size {mask.size} != {base}**{level}")
        padded = np.concatenate(([False], mask, [False]))
        edges = np.flatnonzero(padded[1:] != padded[:-1])
        return cls(base, level, edges[0::2], edges[1::2])

    # inspection -------------------------------------------------------------

    def measure(self) -> Fraction:
        return Fraction(int((self.ends - self.starts).sum()), self.base**self.level)

    def is_empty(self) -> bool:
        return self.starts.size == 0

    def __len__(self):
        return int(self.starts.size)

    def __eq__(self, other):
        if not isinstance(other, IntervalSet):
            return NotImplemented
        return (
            self.base == other.base
            and self.level == other.level
            and np.array_equal(self.starts, other.starts)
            and np.array_equal(self.ends, other.ends)
        )

    __hash__ = None

    def __repr__(self):
        return f"IntervalSet(base={self.base}, level={self.level}, ranges={len(self)}, measure={self.measure()})"

    def at_level(self, level: int) -> tuple[np.ndarray, np.ndarray]:
        """Endpoints rescaled to a finer ``level``."""
        if level < self.level:
            raise PreconditionError(f"cannot coarsen level {self.level} to {level}")
        f = self.base ** (level - self.level)
        return self.starts * f, self.ends * f

    def is_union_at_level(self, level: int) -> bool:
        return level >= self.level

    def cylinders(self) -> list[BadicInterval]:
        """The maximal cylinders making up the set, left to right."""
        out = []
        b, L = self.base, self.level
        for s, e in zip(self.starts.tolist(), self.ends.tolist()):
            while s < e:
                size, lvl = 1, L
                while lvl > 0 and s % (size * b) == 0 and s + size * b <= e:
                    size *= b
                    lvl -= 1
                out.append(BadicInterval(b, lvl, s // size))
                s += size
        return out

    def contains_point(self, x: Fraction) -> bool:
        x = Fraction(x)
        if not 0 <= x < 1:
            return False
        v = x * self.base**self.level
        i = int(np.searchsorted(self.starts, math.floor(v), side="right")) - 1
        return i >= 0 and self.starts[i] <= v < self.ends[i]

    # algebra ----------------------------------------------------------------

    def _align(self, other: "IntervalSet"):
        if self.base != other.base:
            raise PreconditionError(f"base mismatch: {self.base} vs {other.base}")
        L = max(self.level, other.level)
        return L, self.at_level(L), other.at_level(L)

    def union(self, other: "IntervalSet") -> "IntervalSet":
        L, (s1, e1), (s2, e2) = self._align(other)
        s = np.concatenate([s1, s2])
        e = np.concatenate([e1, e2])
        order = np.argsort(s, kind="stable")
        return IntervalSet(self.base, L, *_merge_sorted(s[order], e[order]))

    def complement(self) -> "IntervalSet":
        top = self.base**self.level
        s = np.concatenate([[0], self.ends])
        e = np.concatenate([self.starts, [top]])
        keep = s < e
        return IntervalSet(self.base, self.level, s[keep], e[keep])

    def intersect(self, other: "IntervalSet") -> "IntervalSet":
        L, (s1, e1), (s2, e2) = self._align(other)
        if s1.size == 0 or s2.size == 0:
            return IntervalSet.empty(self.base)
        # every output range starts at the start of one input range
        starts, ends = [], []
        for sa, ea, sb, eb in ((s1, e1, s2, e2), (s2, e2, s1, e1)):
            j = np.searchsorted(sb, sa, side="right") - 1
            ok = j >= 0
            jj = np.where(ok, j, 0)
            inside = ok & (eb[jj] > sa)
            starts.append(sa[inside])
            ends.append(np.minimum(ea[inside], eb[jj[inside]]))
        s = np.concatenate(starts)
        e = np.concatenate(ends)
        order = np.argsort(s, kind="stable")
        s, e = s[order], e[order]
        # ranges that start together in both inputs appear twice
        if s.size:
            dup = np.concatenate([[False], (s[1:] == s[:-1]) & (e[1:] == e[:-1])])
            s, e = s[~dup], e[~dup]
        return IntervalSet(self.base, L, *_merge_sorted(s, e))

    def difference(self, other: "IntervalSet") -> "IntervalSet":
        return self.intersect(other.complement())

    __or__ = union
    __and__ = intersect
    __sub__ = difference

    def __invert__(self):
        return self.complement()

    def measure_within(self, cylinder: BadicInterval) -> Fraction:
        """``mu(self & cylinder)`` without building the intersection."""
        L = max(self.level, cylinder.level)
        f = self.base ** (L - cylinder.level)
        lo, hi = cylinder.index * f, (cylinder.index + 1) * f
        s, e = self.at_level(L)
        total = int((np.clip(e, lo, hi) - np.clip(s, lo, hi)).sum())
        return Fraction(total, self.base**L)


def _merge_sorted(s: np.ndarray, e: np.ndarray):
    """Merge overlapping or touching ranges of start-sorted input."""
    if s.size == 0:
        return s, e
    run_end = np.maximum.accumulate(e)
    new = np.concatenate([[True], s[1:] > run_end[:-1]])
    idx = np.flatnonzero(new)
    starts = s[idx]
    ends = run_end[np.concatenate([idx[1:] - 1, [s.size - 1]])]
    return starts, ends


def _canonicalize(base: int, level: int, s: np.ndarray, e: np.ndarray):
    if s.size and (np.any(e <= s) or np.any(s[1:] < e[:-1])):
        order = np.argsort(s, kind="stable")
        s, e = s[order], e[order]
        keep = e > s
        s, e = s[keep], e[keep]
    s, e = _merge_sorted(s, e)
    if s.size and (s[0] < 0 or e[-1] > base**level):
        raise PreconditionError("ranges fall outside [0, 1)")
    if s.size == 0:
        return s, e, 0
    while level > 0 and not np.any(s % base) and not np.any(e % base):
        s, e, level = s // base, e // base, level - 1
    return s, e, level


def set_union(a: IntervalSet, b: IntervalSet) -> IntervalSet:
    return a.union(b)


def set_intersect(a: IntervalSet, b: IntervalSet) -> IntervalSet:
    return a.intersect(b)


def set_complement(a: IntervalSet) -> IntervalSet:
    return a.complement()


def set_measure(a: IntervalSet) -> Fraction:
    return a.measure()


# ---------------------------------------------------------------------------
# Bad sets


def lambda_set(k: int) -> list[Fraction]:
    """Reduced fractions ``p/q`` with ``1 <= q <= k`` and ``0 < p/q < k``."""
    return sorted({Fraction(p, q) for q in range(1, k + 1) for p in range(1, k * q)})


def j_set(base: int, k: int) -> range:
    return range(base**k)


def prefix_level(base: int, k: int, lam: Fraction) -> int:
    """Digits that decide membership in Bad(lam, k, j, eps)."""
    return (lam.numerator * base**k) // lam.denominator + k


def _check_enumeration(base: int, level: int, cap: int, what: str) -> None:
    # compare exponents first so absurd levels never build huge integers
    if level * math.log2(base) > math.log2(cap) + 1 or base**level > cap:
        raise ResourceCapError(f"{what}: {base}**{level} prefixes exceed the enumeration cap {cap}")


@dataclass(frozen=True)
class BadSpec:
    base: int
    lam: Fraction
    k: int
    j: int
    epsilon: Fraction | None = None  # defaults to 1/k

    @property
    def eps(self) -> Fraction:
        return Fraction(1, self.k) if self.epsilon is None else Fraction(self.epsilon)

    @property
    def level(self) -> int:
        return prefix_level(self.base, self.k, Fraction(self.lam))


def _window_code(base: int, k: int, level: int, prefixes: np.ndarray, p: int) -> np.ndarray:
    """Code of the window starting at 0-based offset p in every prefix."""
    shift = level - p - k
    if base & (base - 1) == 0:
        bits = base.bit_length() - 1
        return (prefixes >> (bits * shift)) & (base**k - 1)
    return (prefixes // base**shift) % base**k


def _occurrence_counts(base: int, k: int, level: int, prefixes: np.ndarray) -> np.ndarray:
    """Counts of each k-word over all windows of each level-L prefix.

    Prefix ``a`` stands for the digits of ``a`` in base b, most significant
    first. Returns an array of shape ``(b**k, len(prefixes))``: one row per word.
    """
    size = base**k
    windows = level - k + 1
    if size <= 8 and windows < 256:
        # one byte per word, all words packed into a single uint64
        packed = np.zeros(prefixes.size, dtype=np.uint64)
        one = np.uint64(1)
        for p in range(windows):
            code = _window_code(base, k, level, prefixes, p).astype(np.uint64)
            packed += one << (code * np.uint64(8))
        return np.ascontiguousarray(packed.view(np.uint8).reshape(-1, 8)[:, :size].T)
    dtype = np.uint8 if windows < 256 else np.uint16 if windows < 65536 else np.uint32
    counts = np.zeros((size, prefixes.size), dtype=dtype)
    cols = np.arange(prefixes.size)
    for p in range(windows):
        counts[_window_code(base, k, level, prefixes, p), cols] += 1
    return counts


def bad_mask(
    base: int,
    lam,
    k: int,
    js: Sequence[int],
    epsilon,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> tuple[int, np.ndarray]:
    """Level and membership mask of ``union over j in js of Bad(lam, k, j, epsilon)``.

    A prefix is bad for j when ``|Z_j - pmf_j| > epsilon`` strictly, with Z
    taken over all windows of the prefix.
    """
    lam = Fraction(lam)
    level = prefix_level(base, k, lam)
    _check_enumeration(base, level, cap, f"Bad(lambda={lam}, k={k})")
    size = base**k
    eps = float(Fraction(epsilon))
    js = list(js)
    pmf = np.array([poisson_pmf(lam, j) for j in js])
    windows = level - k + 1
    mask = np.zeros(base**level, dtype=bool)
    for lo in range(0, base**level, ENUM_CHUNK):
        prefixes = np.arange(lo, min(lo + ENUM_CHUNK, base**level), dtype=np.int64)
        counts = _occurrence_counts(base, k, level, prefixes)
        hit = np.zeros(prefixes.size, dtype=bool)
        for j, ref in zip(js, pmf):
            if j > windows:
                # no word can occur j times, so Z_j = 0
                if ref > eps:
                    hit[:] = True
                    break
                continue
            z = (counts == j).sum(axis=0, dtype=np.int64) / size
            hit |= np.abs(z - ref) > eps
        mask[lo : lo + prefixes.size] = hit
    return level, mask


def bad_set(spec: BadSpec, cap: int = DEFAULT_ENUMERATION_CAP) -> IntervalSet:
    level, mask = bad_mask(spec.base, spec.lam, spec.k, [spec.j], spec.eps, cap)
    return IntervalSet.from_mask(spec.base, level, mask)


@lru_cache(maxsize=64)
def _bad_k_cached(base: int, k: int, epsilon: Fraction | None, cap: int) -> IntervalSet:
    eps = Fraction(1, k) if epsilon is None else epsilon
    out = IntervalSet.empty(base)
    for lam in lambda_set(k):
        level, mask = bad_mask(base, lam, k, j_set(base, k), eps, cap)
        out = out.union(IntervalSet.from_mask(base, level, mask))
    return out


def bad_k(base: int, k: int, epsilon=None, cap: int = DEFAULT_ENUMERATION_CAP) -> IntervalSet:
    """Union of Bad(lam, k, j, 1/k) over j < b**k and lam in the k-th lambda set."""
    return _bad_k_cached(base, k, None if epsilon is None else Fraction(epsilon), cap)


def e_set(base: int, k_lo: int, k_hi: int, epsilon=None, cap: int = DEFAULT_ENUMERATION_CAP) -> IntervalSet:
    """Complement in (0, 1) of the union of Bad_k for ``k_lo <= k < k_hi``."""
    check_k_range(base, k_lo, k_hi, cap)
    bad = IntervalSet.empty(base)
    for k in range(k_lo, k_hi):
        bad = bad.union(bad_k(base, k, epsilon, cap))
    return bad.complement()


def check_k_range(base: int, k_lo: int, k_hi: int, cap: int = DEFAULT_ENUMERATION_CAP) -> None:
    """Raise :class:`ResourceCapError` if any Bad_k in the range needs more
    than ``cap`` prefixes. Only exponents are compared, so ranges like the
    ones from ``N_n = b**(2n)`` are rejected without enumerating anything."""
    if k_lo < 1 and k_hi > k_lo:
        raise PreconditionError("k must be >= 1")
    if k_hi <= k_lo:
        return
    # the deepest prefix comes from the largest k and the largest lambda below k
    k = k_hi - 1
    lam = Fraction(k * k - 1, k)
    if k * math.log2(base) > 62:
        raise ResourceCapError(f"Bad_{k}: prefix length beyond any enumeration cap")
    level = prefix_level(base, k, lam)
    _check_enumeration(base, level, cap, f"Bad_{k}")


@dataclass(frozen=True)
class Fact1Report:
    base: int
    k: int
    measure: Fraction
    bound: float
    status: str  # "vacuous", "holds" or "violated"

    def to_dict(self) -> dict:
        return {
            "base": self.base,
            "k": self.k,
            "measure": {"num": self.measure.numerator, "den": self.measure.denominator, "value": float(self.measure)},
            "bound": self.bound,
            "status": self.status,
        }


def fact1_bound(base: int, k: int) -> float:
    """``2 b**k k**3 exp(-b**k / (2 k**5))``."""
    bk = float(base) ** k
    return 2.0 * bk * k**3 * math.exp(-bk / (2.0 * k**5))


def check_fact1_bound(base: int, k: int, cap: int = DEFAULT_ENUMERATION_CAP) -> Fact1Report:
    check_k_range(base, k, k + 1, cap)
    mu = bad_k(base, k, cap=cap).measure()
    bound = fact1_bound(base, k)
    status = "vacuous" if bound >= 1 else ("holds" if mu < bound else "violated")
    return Fact1Report(base, k, mu, bound, status)


# ---------------------------------------------------------------------------
# digit-selection algorithm


def square_threshold(base: int, n: int) -> Fraction:
    """``1 / N_n`` with ``N_n = b**(2n)``."""
    return Fraction(1, base ** (2 * n))


def square_k_range(base: int, n: int) -> tuple[int, int]:
    """``[N_n, N_{n+1})``."""
    return base ** (2 * n), base ** (2 * n + 2)


@dataclass(frozen=True)
class AlgorithmConfig:
    """Steps ``n = n0+1 .. n0+steps``; ``k_ranges[i]`` is the half-open range of
    k whose Bad_k are removed at step ``n0+1+i`` (missing entries: nothing).

    ``threshold`` is ``"square"`` (``b**(-2n)``) or a list of explicit
    fractions, one per step. ``epsilon`` None means ``1/k``.
    """

    base: int = 2
    n0: int = 0
    steps: int = 8
    k_ranges: tuple[tuple[int, int], ...] = ()
    threshold: str | tuple[Fraction, ...] = "square"
    epsilon: Fraction | None = None
    cap: int = DEFAULT_ENUMERATION_CAP

    @classmethod
    def square(cls, base: int = 2, n0: int = 0, steps: int = 1, cap: int = DEFAULT_ENUMERATION_CAP) -> "AlgorithmConfig":
        ranges = tuple(square_k_range(base, n) for n in range(n0 + 1, n0 + steps + 1))
        return cls(base, n0, steps, ranges, "square", None, cap)

    def k_range(self, n: int) -> tuple[int, int]:
        i = n - self.n0 - 1
        return self.k_ranges[i] if i < len(self.k_ranges) else (0, 0)

    def threshold_at(self, n: int) -> Fraction:
        if self.threshold == "square":
            return square_threshold(self.base, n)
        return Fraction(self.threshold[n - self.n0 - 1])

    def to_dict(self) -> dict:
        return {
            "base": self.base,
            "n0": self.n0,
            "steps": self.steps,
            "k_ranges": [list(r) for r in self.k_ranges],
            "threshold": self.threshold if isinstance(self.threshold, str) else [str(t) for t in self.threshold],
            "epsilon": None if self.epsilon is None else str(self.epsilon),
            "cap": self.cap,
        }


def check_feasibility(config: AlgorithmConfig) -> None:
    """Reject configurations whose E sets cannot be enumerated within the cap."""
    for n in range(config.n0 + 1, config.n0 + config.steps + 1):
        lo, hi = config.k_range(n)
        try:
            check_k_range(config.base, lo, hi, config.cap)
        except ResourceCapError as exc:
            raise ResourceCapError(f"step n={n}, k in [{lo}, {hi}): {exc}") from None


@dataclass
class AlgorithmState:
    n: int
    interval: BadicInterval
    measure: Fraction  # mu(I_n & intersection of E_m, m <= n)
    emitted: list[int] = field(default_factory=list)


@dataclass(frozen=True)
class TraceRecord:
    n: int
    chosen_digit: int
    interval: BadicInterval
    measure: Fraction
    threshold: Fraction
    candidates: tuple[Fraction, ...]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "chosen_digit": self.chosen_digit,
            "interval": {"level": self.interval.level, "index": self.interval.index},
            "measure_num": self.measure.numerator,
            "measure_den": self.measure.denominator,
            "threshold_num": self.threshold.numerator,
            "threshold_den": self.threshold.denominator,
        }


@dataclass(frozen=True)
class AlgorithmResult:
    config: AlgorithmConfig
    digits: tuple[int, ...]
    trace: tuple[TraceRecord, ...]
    final: AlgorithmState


def run_algorithm(
    config: AlgorithmConfig,
    e_builder: Callable[[int, int, int], IntervalSet] | None = None,
) -> AlgorithmResult:
    """Choose digits one at a time, keeping the leftmost child interval whose
    intersection with every E set so far has measure above the threshold.

    ``e_builder(base, k_lo, k_hi)`` overrides how E sets are built (tests
    use it to inject custom sets). Raises :class:`NoAdmissibleDigit` when all
    b children fall at or below the threshold.
    """
    check_feasibility(config)
    b = config.base
    if e_builder is None:
        def e_builder(base, lo, hi):
            return e_set(base, lo, hi, config.epsilon, config.cap)

    interval = BadicInterval(b, 0, 0)
    running = IntervalSet.full(b)
    state = AlgorithmState(config.n0, interval, Fraction(1))
    trace = []
    for n in range(config.n0 + 1, config.n0 + config.steps + 1):
        lo, hi = config.k_range(n)
        if hi > lo:
            running = running.intersect(e_builder(b, lo, hi))
        thr = config.threshold_at(n)
        cands = tuple(running.measure_within(interval.child(v)) for v in range(b))
        chosen = next((v for v, m in enumerate(cands) if m > thr), None)
        if chosen is None:
            raise NoAdmissibleDigit(
                f"step n={n}: no child of {interval} keeps measure above {thr} "
                f"(child measures {[str(m) for m in cands]})",
                step=n,
                measures=cands,
                threshold=thr,
            )
        interval = interval.child(chosen)
        running = running.intersect(interval.as_set())
        state.emitted.append(chosen)
        state.n, state.interval, state.measure = n, interval, cands[chosen]
        trace.append(TraceRecord(n, chosen, interval, cands[chosen], thr, cands))
    return AlgorithmResult(config, tuple(state.emitted), tuple(trace), state)
