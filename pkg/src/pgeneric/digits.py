"""Base-b digit sources, materialized buffers and digit files.

Positions are 1-based throughout: position ``p`` of a stream is the p-th
digit after the radix point. Streams are restartable descriptors; calling
:meth:`DigitStream.take` always starts again from position 1.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import DigitFormatError, PreconditionError, ResourceCapError

SYMBOLS = "0123456789abcdefghijklmnopqrstuvwxyz"
MAX_TEXT_BASE = len(SYMBOLS)

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB

PACKED_MAGIC = b"PGDG"
PACKED_VERSION = 1
PACKED_HEADER = struct.Struct("<4sBHxQ")  # 16 bytes

DEFAULT_DEBRUIJN_CAP = 1 << 26
CHUNK = 1 << 20


def check_base(base: int) -> int:
    if not isinstance(base, (int, np.integer)) or base < 2:
        raise PreconditionError(f"base must be an integer >= 2, got {base!r}")
    return int(base)


def digit_dtype(base: int) -> np.dtype:
    if base <= 1 << 8:
        return np.dtype(np.uint8)
    if base <= 1 << 16:
        return np.dtype(np.uint16)
    if base <= 1 << 32:
        return np.dtype(np.uint32)
    return np.dtype(np.uint64)


@dataclass(frozen=True)
class DigitBuffer:
    """An immutable, random-access prefix ``x_1 ... x_n`` of a digit stream."""

    base: int
    digits: np.ndarray = field(repr=False)

    def __post_init__(self):
        check_base(self.base)
        arr = np.ascontiguousarray(self.digits, dtype=digit_dtype(self.base))
        if arr.ndim != 1:
            raise PreconditionError("digits must be one-dimensional")
        if arr.size and int(arr.max()) >= self.base:
            raise DigitFormatError(f"digit {int(arr.max())} out of range for base {self.base}")
        arr.setflags(write=False)
        object.__setattr__(self, "digits", arr)

    def __len__(self) -> int:
        return int(self.digits.size)

    def at(self, position: int) -> int:
        """Digit at 1-based ``position``."""
        if not 1 <= position <= len(self):
            raise IndexError(f"position {position} outside [1, {len(self)}]")
        return int(self.digits[position - 1])

    def segment(self, start: int, stop: int) -> np.ndarray:
        """Digits at 1-based positions in ``[start, stop)``."""
        if not 1 <= start <= stop <= len(self) + 1:
            raise IndexError(f"segment [{start}, {stop}) outside buffer of length {len(self)}")
        return self.digits[start - 1 : stop - 1]

    def prefix(self, n: int) -> "DigitBuffer":
        if n > len(self):
            raise PreconditionError(f"prefix {n} longer than buffer ({len(self)})")
        return DigitBuffer(self.base, self.digits[:n])

    def to_text(self) -> str:
        if self.base > MAX_TEXT_BASE:
            raise PreconditionError(f"text rendering supports base <= {MAX_TEXT_BASE}")
        table = np.frombuffer(SYMBOLS.encode(), dtype=np.uint8)
        return table[self.digits.astype(np.intp)].tobytes().decode()

    def __eq__(self, other):
        if not isinstance(other, DigitBuffer):
            return NotImplemented
        return self.base == other.base and np.array_equal(self.digits, other.digits)

    __hash__ = None


def from_text(text: str, base: int) -> DigitBuffer:
    """Decode symbols ``0-9a-z`` (case-insensitive); newlines are ignored."""
    base = check_base(base)
    if base > MAX_TEXT_BASE:
        raise PreconditionError(f"text formats support base <= {MAX_TEXT_BASE}")
    raw = np.frombuffer(text.lower().replace("\r", "").replace("\n", "").encode("ascii", "replace"),
                        dtype=np.uint8)
    lut = np.full(256, 255, dtype=np.uint8)
    for value, sym in enumerate(SYMBOLS[:base]):
        lut[ord(sym)] = value
    values = lut[raw]
    bad = np.flatnonzero(values == 255)
    if bad.size:
        sym = chr(raw[bad[0]])
        raise DigitFormatError(f"invalid symbol {sym!r} for base {base} at position {bad[0] + 1}")
    return DigitBuffer(base, values)


# ---------------------------------------------------------------------------
# streams


class DigitStream:
    """A pull-based, restartable producer of base-b digits.

    Subclasses implement :meth:`chunks`; ``length`` is ``None`` for
    unbounded streams.
    """

    kind = "abstract"
    length: int | None = None

    def __init__(self, base: int):
        self.base = check_base(base)

    def chunks(self) -> Iterator[np.ndarray]:
        raise NotImplementedError

    def params(self) -> dict:
        return {}

    def descriptor(self) -> dict:
        return {"kind": self.kind, "base": self.base, **self.params()}

    def take(self, n: int) -> np.ndarray:
        """The first ``n`` digits as a fresh array."""
        if n < 0:
            raise PreconditionError("n must be non-negative")
        if self.length is not None and n > self.length:
            raise PreconditionError(f"stream has only {self.length} digits, asked for {n}")
        out = np.empty(n, dtype=digit_dtype(self.base))
        filled = 0
        for chunk in self.chunks():
            if filled >= n:
                break
            step = min(n - filled, chunk.size)
            out[filled : filled + step] = chunk[:step]
            filled += step
        if filled < n:
            raise PreconditionError(f"stream exhausted after {filled} digits")
        return out

    def buffer(self, n: int) -> DigitBuffer:
        return DigitBuffer(self.base, self.take(n))

    def __iter__(self) -> Iterator[int]:
        for chunk in self.chunks():
            yield from (int(d) for d in chunk)

    def __repr__(self):
        inner = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}(base={self.base}{', ' if inner else ''}{inner})"


def splitmix64(seed: int, count: int, start: int = 0) -> np.ndarray:
    """Outputs ``start .. start+count-1`` of splitmix64 seeded with ``seed``.

    Output ``i`` mixes the state ``seed + (i + 1) * gamma`` so any block can be
    produced without running the generator from the beginning.
    """
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    z = np.uint64(seed & MASK64) + idx * np.uint64(GOLDEN_GAMMA)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


def mulhi_digits(words: np.ndarray, base: int) -> np.ndarray:
    """``floor(word * base / 2**64)`` for each 64-bit word; requires base < 2**32."""
    b = np.uint64(base)
    hi = words >> np.uint64(32)
    lo = words & np.uint64(0xFFFFFFFF)
    return (hi * b + ((lo * b) >> np.uint64(32))) >> np.uint64(32)


class RandomStream(DigitStream):
    kind = "random"

    def __init__(self, base: int, seed: int):
        super().__init__(base)
        if self.base >= 1 << 32:
            raise PreconditionError("random streams support base < 2**32")
        self.seed = int(seed) & MASK64

    def params(self):
        return {"seed": self.seed}

    def block(self, start: int, count: int) -> np.ndarray:
        """Digits at 0-based offsets ``start .. start+count-1``."""
        words = splitmix64(self.seed, count, start)
        return mulhi_digits(words, self.base).astype(digit_dtype(self.base))

    def chunks(self):
        start = 0
        while True:
            yield self.block(start, CHUNK)
            start += CHUNK


class ConstantStream(DigitStream):
    kind = "constant"

    def __init__(self, base: int, digit: int):
        super().__init__(base)
        if not 0 <= digit < self.base:
            raise PreconditionError(f"digit {digit} out of range for base {self.base}")
        self.digit = int(digit)

    def params(self):
        return {"digit": self.digit}

    def chunks(self):
        block = np.full(CHUNK, self.digit, dtype=digit_dtype(self.base))
        while True:
            yield block


class ChampernowneStream(DigitStream):
    kind = "champernowne"

    def chunks(self):
        b = self.base
        width = 1
        lo = 1
        while True:
            hi = lo * b  # numbers with `width` digits: [lo, hi)
            for start in range(lo, hi, CHUNK // width + 1):
                nums = np.arange(start, min(hi, start + CHUNK // width + 1), dtype=object if hi > 1 << 62 else np.int64)
                out = np.empty((nums.size, width), dtype=digit_dtype(b))
                for col in range(width - 1, -1, -1):
                    out[:, col] = nums % b
                    nums = nums // b
                yield out.ravel()
            lo = hi
            width += 1


def fkm_debruijn(base: int, order: int) -> np.ndarray:
    """Cyclic de Bruijn sequence of the given order, lexicographically least.

    Concatenates the Lyndon words whose length divides ``order`` in
    lexicographic order (Fredricksen-Kessler-Maiorana), generated with
    Duval's successor rule.
    """
    out: list[int] = []
    word = [-1]
    top = base - 1
    while word:
        word[-1] += 1
        m = len(word)
        if order % m == 0:
            out.extend(word)
        while len(word) < order:
            word.append(word[-m])
        while word and word[-1] == top:
            word.pop()
    return np.asarray(out, dtype=digit_dtype(base))


class DeBruijnStream(DigitStream):
    """An order-k de Bruijn cycle repeated forever."""

    kind = "debruijn"

    def __init__(self, base: int, order: int, cap: int = DEFAULT_DEBRUIJN_CAP):
        super().__init__(base)
        if order < 1:
            raise PreconditionError("order must be >= 1")
        if self.base**order > cap:
            raise ResourceCapError(f"{self.base}**{order} exceeds de Bruijn cap {cap}")
        self.order = int(order)
        self._cycle = None

    def params(self):
        return {"order": self.order}

    @property
    def cycle(self) -> np.ndarray:
        if self._cycle is None:
            self._cycle = fkm_debruijn(self.base, self.order)
            self._cycle.setflags(write=False)
        return self._cycle

    def chunks(self):
        cyc = self.cycle
        reps = max(1, CHUNK // cyc.size)
        block = np.tile(cyc, reps)
        while True:
            yield block


def _remaining_connected(used: np.ndarray, node: int, base: int, order: int, remaining: int) -> bool:
    """Whether every unused edge of the order-``order`` de Bruijn graph is
    weakly connected to ``node``. Nodes are (order-1)-words, edges order-words."""
    if remaining == 0:
        return True
    nodes = base ** (order - 1)
    seen_nodes = np.zeros(nodes, dtype=bool)
    seen_edges = np.zeros(used.size, dtype=bool)
    stack = [node]
    seen_nodes[node] = True
    found = 0
    while stack:
        u = stack.pop()
        for d in range(base):
            for e, v in ((u * base + d, (u * base + d) % nodes), (d * nodes + u, d * nodes // base + u // base)):
                if used[e] or seen_edges[e]:
                    continue
                seen_edges[e] = True
                found += 1
                if not seen_nodes[v]:
                    seen_nodes[v] = True
                    stack.append(v)
    return found == remaining


def extend_debruijn(seq: list[int], base: int, order: int) -> list[int]:
    """Extend a linear de Bruijn sequence of ``order`` to one of ``order + 1``.

    Returns the lexicographically least extension: digits are chosen
    greedily, smallest first, keeping only choices after which the unused
    (order+1)-words can still be traversed in one trail.
    """
    new = order + 1
    span = base**new
    nodes = base**order
    used = np.zeros(span, dtype=bool)
    code = 0
    for i, d in enumerate(seq):
        code = (code * base + d) % span
        if i >= new - 1:
            used[code] = True
    remaining = span - int(used.sum())
    out = list(seq)
    cur = 0
    for d in seq[-order:]:
        cur = cur * base + d
    while remaining:
        options = [d for d in range(base) if not used[cur * base + d]]
        if not options:
            raise RuntimeError(f"de Bruijn extension stuck at order {new} (internal error)")
        chosen = None
        for d in options:
            e = cur * base + d
            used[e] = True
            if len(options) == 1 or _remaining_connected(used, e % nodes, base, new, remaining - 1):
                chosen = d
                break
            used[e] = False
        if chosen is None:
            raise RuntimeError(f"de Bruijn extension failed at order {new} (internal error)")
        out.append(chosen)
        remaining -= 1
        cur = (cur * base + chosen) % nodes
    return out


class ExtendedDeBruijnStream(DigitStream):
    """A finite stream whose length-(b^k + k - 1) prefix is a de Bruijn
    sequence of order k for every k up to ``max_order``."""

    kind = "extdebruijn"

    def __init__(self, base: int, max_order: int, cap: int = DEFAULT_DEBRUIJN_CAP):
        super().__init__(base)
        if self.base < 3:
            raise PreconditionError("nested de Bruijn extension requires base >= 3")
        if max_order < 1:
            raise PreconditionError("max_order must be >= 1")
        if self.base**max_order > cap:
            raise ResourceCapError(f"{self.base}**{max_order} exceeds de Bruijn cap {cap}")
        self.max_order = int(max_order)
        self.length = self.base**max_order + max_order - 1
        self._digits = None

    def params(self):
        return {"max_order": self.max_order}

    @property
    def sequence(self) -> np.ndarray:
        if self._digits is None:
            seq = list(range(self.base))
            for order in range(1, self.max_order):
                seq = extend_debruijn(seq, self.base, order)
            self._digits = np.asarray(seq, dtype=digit_dtype(self.base))
            self._digits.setflags(write=False)
        return self._digits

    def chunks(self):
        yield self.sequence


class BufferStream(DigitStream):
    """A finite stream over an in-memory buffer (e.g. a digit file)."""

    kind = "buffer"

    def __init__(self, buffer: DigitBuffer, origin: str | None = None):
        super().__init__(buffer.base)
        self.data = buffer
        self.length = len(buffer)
        self.origin = origin

    def params(self):
        return {"length": self.length, "origin": self.origin}

    def chunks(self):
        yield self.data.digits


def stream_random(base: int, seed: int) -> RandomStream:
    return RandomStream(base, seed)


def stream_constant(base: int, digit: int) -> ConstantStream:
    return ConstantStream(base, digit)


def stream_champernowne(base: int) -> ChampernowneStream:
    return ChampernowneStream(base)


def stream_debruijn(base: int, order: int, cap: int = DEFAULT_DEBRUIJN_CAP) -> DeBruijnStream:
    return DeBruijnStream(base, order, cap)


def stream_extend_debruijn(base: int, max_order: int, cap: int = DEFAULT_DEBRUIJN_CAP) -> ExtendedDeBruijnStream:
    return ExtendedDeBruijnStream(base, max_order, cap)


# ---------------------------------------------------------------------------
# files


def _bit_width(base: int) -> int:
    return (base - 1).bit_length()


def pack_digits(buffer: DigitBuffer) -> bytes:
    width = _bit_width(buffer.base)
    n = len(buffer)
    header = PACKED_HEADER.pack(PACKED_MAGIC, PACKED_VERSION, buffer.base, n)
    if n == 0:
        return header
    vals = buffer.digits.astype(np.uint64)
    shifts = np.arange(width - 1, -1, -1, dtype=np.uint64)
    bits = ((vals[:, None] >> shifts) & np.uint64(1)).astype(np.uint8).ravel()
    return header + np.packbits(bits).tobytes()


def unpack_digits(data: bytes) -> DigitBuffer:
    if len(data) < PACKED_HEADER.size:
        raise DigitFormatError("truncated packed header")
    magic, version, base, n = PACKED_HEADER.unpack_from(data)
    if magic != PACKED_MAGIC:
        raise DigitFormatError(f"bad magic {magic!r}")
    if version != PACKED_VERSION:
        raise DigitFormatError(f"unsupported packed version {version}")
    if base < 2:
        raise DigitFormatError(f"invalid base {base} in header")
    width = _bit_width(base)
    need = (n * width + 7) // 8
    body = np.frombuffer(data, dtype=np.uint8, offset=PACKED_HEADER.size)
    if body.size < need:
        raise DigitFormatError(f"truncated packed body: need {need} bytes, have {body.size}")
    if n == 0:
        return DigitBuffer(base, np.empty(0, dtype=digit_dtype(base)))
    bits = np.unpackbits(body[:need])[: n * width].reshape(n, width).astype(np.uint64)
    weights = np.uint64(1) << np.arange(width - 1, -1, -1, dtype=np.uint64)
    vals = (bits * weights).sum(axis=1)
    if vals.size and int(vals.max()) >= base:
        raise DigitFormatError(f"packed digit {int(vals.max())} out of range for base {base}")
    return DigitBuffer(base, vals.astype(digit_dtype(base)))


def write_digit_file(path: str | os.PathLike, buffer: DigitBuffer, format: str = "ascii") -> None:
    path = Path(path)
    if format == "ascii":
        path.write_text(buffer.to_text())
    elif format == "packed":
        path.write_bytes(pack_digits(buffer))
    else:
        raise PreconditionError(f"unknown digit file format {format!r}")


def read_digit_file(path: str | os.PathLike, format: str = "ascii", base: int | None = None) -> DigitBuffer:
    """Read an ascii or packed digit file.

    Ascii files carry no header, so ``base`` is required for them; for packed
    files the header base is used and ``base``, if given, must agree.
    """
    path = Path(path)
    if format == "ascii":
        if base is None:
            raise PreconditionError("ascii digit files need an explicit base")
        return from_text(path.read_text(), base)
    if format == "packed":
        buf = unpack_digits(path.read_bytes())
        if base is not None and base != buf.base:
            raise DigitFormatError(f"file base {buf.base} != requested base {base}")
        return buf
    raise PreconditionError(f"unknown digit file format {format!r}")
