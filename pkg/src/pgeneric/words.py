"""Overlapping occurrence counts of length-k words in digit prefixes.

A word ``w_1 ... w_k`` is coded as ``sum(w_i * b**(k - i))``, so codes of
consecutive windows satisfy ``c[p+1] = (c[p] mod b**(k-1)) * b + x[p+k]``.
Counting evaluates that recurrence for a whole range of windows at once
(Horner's scheme over the k window offsets) and bins the codes.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .digits import DigitBuffer
from .errors import PreconditionError

SATURATION = np.iinfo(np.uint16).max
DEFAULT_DENSE_CAP = 1 << 26
MAX_CODE = 1 << 63


def dense_cap() -> int:
    """Largest b**k kept as a dense table; ``PG_DENSE_CAP`` overrides."""
    env = os.environ.get("PG_DENSE_CAP")
    return int(env) if env else DEFAULT_DENSE_CAP


def check_word_length(base: int, k: int) -> int:
    if k < 1:
        raise PreconditionError("word length must be >= 1")
    if base**k >= MAX_CODE:
        raise PreconditionError(f"{base}**{k} does not fit 63-bit word codes")
    return base**k


def encode_word(word: Sequence[int], base: int) -> int:
    code = 0
    for d in word:
        if not 0 <= d < base:
            raise PreconditionError(f"digit {d} out of range for base {base}")
        code = code * base + int(d)
    return code


def decode_word(code: int, k: int, base: int) -> tuple[int, ...]:
    if not 0 <= code < base**k:
        raise PreconditionError(f"code {code} out of range for k={k}, base={base}")
    out = []
    for _ in range(k):
        code, d = divmod(code, base)
        out.append(d)
    return tuple(reversed(out))


def parse_word(text: str, base: int) -> tuple[int, ...]:
    from .digits import from_text

    return tuple(int(d) for d in from_text(text, base).digits)


@dataclass(frozen=True)
class WindowSpec:
    """Windows of length ``k`` starting at positions ``first .. first+count-1``."""

    k: int
    first: int
    count: int

    def __post_init__(self):
        if self.k < 1 or self.first < 1 or self.count < 0:
            raise PreconditionError(f"invalid window spec {self}")

    @property
    def last_digit(self) -> int:
        """Largest position any window reads."""
        return self.first + self.count + self.k - 2

    @classmethod
    def prefix(cls, k: int, n: int) -> "WindowSpec":
        """All windows lying inside ``x_1 ... x_n``."""
        return cls(k, 1, max(0, n - k + 1))


def window_codes(buffer: DigitBuffer, spec: WindowSpec) -> np.ndarray:
    """Codes of the windows in ``spec`` as an int64 array."""
    check_word_length(buffer.base, spec.k)
    if spec.count and spec.last_digit > len(buffer):
        raise PreconditionError(
            f"buffer of length {len(buffer)} too short for windows up to position {spec.last_digit}"
        )
    lo = spec.first - 1
    digits = buffer.digits
    codes = np.zeros(spec.count, dtype=np.int64)
    b = np.int64(buffer.base)
    for offset in range(spec.k):
        codes *= b
        codes += digits[lo + offset : lo + offset + spec.count]
    return codes


@dataclass(frozen=True)
class OccurrenceTable:
    """Occurrence counts of every length-k word over a window range.

    Dense tables hold saturating 16-bit counters plus an exact ``overflow``
    ledger for counters at the cap. Sparse tables hold only the present
    codes with their exact counts.
    """

    base: int
    k: int
    windows: int
    dense: np.ndarray | None = field(default=None, repr=False)
    overflow: dict = field(default_factory=dict, repr=False)
    codes: np.ndarray | None = field(default=None, repr=False)
    counts: np.ndarray | None = field(default=None, repr=False)

    @property
    def representation(self) -> str:
        return "dense" if self.dense is not None else "sparse"

    @property
    def size(self) -> int:
        return self.base**self.k

    @classmethod
    def from_exact(cls, base: int, k: int, exact: np.ndarray) -> "OccurrenceTable":
        exact = np.asarray(exact, dtype=np.int64)
        sat = np.minimum(exact, SATURATION).astype(np.uint16)
        big = np.flatnonzero(exact >= SATURATION)
        ledger = {int(c): int(exact[c]) for c in big}
        sat.setflags(write=False)
        return cls(base, k, int(exact.sum()), dense=sat, overflow=ledger)

    @classmethod
    def from_codes(cls, base: int, k: int, codes: np.ndarray, counts: np.ndarray) -> "OccurrenceTable":
        codes = np.asarray(codes, dtype=np.int64)
        counts = np.asarray(counts, dtype=np.int64)
        order = np.argsort(codes, kind="stable")
        codes, counts = codes[order], counts[order]
        codes.setflags(write=False)
        counts.setflags(write=False)
        return cls(base, k, int(counts.sum()), codes=codes, counts=counts)

    def count(self, word) -> int:
        code = word if isinstance(word, (int, np.integer)) else encode_word(word, self.base)
        if self.dense is not None:
            c = int(self.dense[code])
            return self.overflow[int(code)] if c == SATURATION else c
        i = np.searchsorted(self.codes, code)
        if i < self.codes.size and self.codes[i] == code:
            return int(self.counts[i])
        return 0

    @property
    def present(self) -> int:
        """Number of distinct words that occur at least once."""
        if self.dense is not None:
            return int(np.count_nonzero(self.dense))
        return int(self.codes.size)

    @property
    def absent(self) -> int:
        return self.size - self.present

    def present_codes(self) -> np.ndarray:
        if self.dense is not None:
            return np.flatnonzero(self.dense)
        return self.codes

    def exact_counts(self) -> np.ndarray:
        """Full length-b**k array of exact counts (materializes sparse tables)."""
        out = np.zeros(self.size, dtype=np.int64)
        if self.dense is not None:
            out[:] = self.dense
            for code, c in self.overflow.items():
                out[code] = c
        else:
            out[self.codes] = self.counts
        return out

    def to_sparse(self) -> "OccurrenceTable":
        if self.dense is None:
            return self
        codes = self.present_codes()
        counts = self.dense[codes].astype(np.int64)
        for code, c in self.overflow.items():
            counts[np.searchsorted(codes, code)] = c
        return OccurrenceTable.from_codes(self.base, self.k, codes, counts)

    def histogram(self, j_max: int) -> "Histogram":
        return histogram(self, j_max)


def _partial_dense(buffer, spec, size):
    return np.bincount(window_codes(buffer, spec), minlength=size)


def count_words(
    buffer: DigitBuffer,
    spec: WindowSpec,
    *,
    cap: int | None = None,
    threads: int = 1,
    representation: str | None = None,
) -> OccurrenceTable:
    """Count every length-k word over the windows described by ``spec``.

    Uses a dense table when ``b**k <= cap`` (default :func:`dense_cap`),
    otherwise a sparse one; ``representation`` forces either. With
    ``threads > 1`` the window range is split into contiguous pieces whose
    partial counts are added together.
    """
    size = check_word_length(buffer.base, spec.k)
    if spec.count and spec.last_digit > len(buffer):
        raise PreconditionError(
            f"buffer of length {len(buffer)} too short for windows up to position {spec.last_digit}"
        )
    cap = dense_cap() if cap is None else cap
    rep = representation or ("dense" if size <= cap else "sparse")
    if rep not in ("dense", "sparse"):
        raise PreconditionError(f"unknown representation {rep!r}")

    pieces = [spec]
    if threads > 1 and spec.count > 1 << 16:
        step = -(-spec.count // threads)
        pieces = [
            WindowSpec(spec.k, spec.first + s, min(step, spec.count - s))
            for s in range(0, spec.count, step)
        ]

    if rep == "dense":
        if len(pieces) == 1:
            exact = _partial_dense(buffer, spec, size)
        else:
            with ThreadPoolExecutor(threads) as pool:
                parts = list(pool.map(lambda p: _partial_dense(buffer, p, size), pieces))
            exact = np.sum(parts, axis=0)
        return OccurrenceTable.from_exact(buffer.base, spec.k, exact)

    def partial_sparse(piece):
        return np.unique(window_codes(buffer, piece), return_counts=True)

    if len(pieces) == 1:
        codes, counts = partial_sparse(spec)
    else:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(partial_sparse, pieces))
        allc = np.concatenate([c for c, _ in parts])
        alln = np.concatenate([n for _, n in parts])
        codes, inv = np.unique(allc, return_inverse=True)
        counts = np.bincount(inv, weights=alln).astype(np.int64)
    return OccurrenceTable.from_codes(buffer.base, spec.k, codes, counts)


def count_occurrences(buffer: DigitBuffer, word: Sequence[int], n: int) -> int:
    """Overlapping occurrences of ``word`` in ``x_1 ... x_n``."""
    k = len(word)
    if n > len(buffer):
        raise PreconditionError(f"n={n} exceeds buffer length {len(buffer)}")
    if k < 1 or k > n:
        raise PreconditionError(f"word length {k} must be in [1, n={n}]")
    code = encode_word(word, buffer.base)
    return int(np.count_nonzero(window_codes(buffer, WindowSpec.prefix(k, n)) == code))


@dataclass(frozen=True)
class Histogram:
    """``counts[j]`` words occur exactly j times (j <= j_max); ``above`` more often."""

    counts: np.ndarray
    above: int

    @property
    def j_max(self) -> int:
        return self.counts.size - 1

    @property
    def total(self) -> int:
        return int(self.counts.sum()) + self.above


def histogram(table: OccurrenceTable, j_max: int) -> Histogram:
    if not 0 <= j_max < SATURATION:
        raise PreconditionError(f"j_max must be in [0, {SATURATION})")
    if table.dense is not None:
        vals = table.dense
        low = vals[vals <= j_max]
        counts = np.bincount(low, minlength=j_max + 1).astype(np.int64)
        above = int(vals.size - low.size)
    else:
        vals = table.counts
        low = vals[vals <= j_max]
        counts = np.bincount(low, minlength=j_max + 1).astype(np.int64)
        counts[0] += table.absent
        above = int(vals.size - low.size)
    counts.setflags(write=False)
    return Histogram(counts, above)


def _word_set(buffer: DigitBuffer, k: int, start: int, stop: int) -> np.ndarray:
    """Distinct codes of the k-windows lying inside positions ``[start, stop)``."""
    count = max(0, stop - start - k + 1)
    return np.unique(window_codes(buffer, WindowSpec(k, start, count)))


def fresh_word_count(buffer: DigitBuffer, k: int, a: int, m: int, e: int) -> int:
    """Words with a window inside ``[m, e)`` but none inside ``[a, m)``.

    A window counts for a range only if all k of its digits fall in that
    range, so a copy of an earlier stretch contributes no fresh words.
    """
    if not 1 <= a < m < e:
        raise PreconditionError(f"need 1 <= a < m < e, got a={a}, m={m}, e={e}")
    if e - 1 > len(buffer):
        raise PreconditionError(f"e={e} beyond buffer of length {len(buffer)}")
    check_word_length(buffer.base, k)
    late = _word_set(buffer, k, m, e)
    early = _word_set(buffer, k, a, m)
    return int(np.count_nonzero(~np.isin(late, early, assume_unique=True)))
