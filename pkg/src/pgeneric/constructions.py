"""Reduction maps from integer sequences z to digit streams.

Both maps cut the positions into blocks ``B_i = [b**k_{i-1}, b**k_i)``.

* ``f_bold`` copies x on the head of each block and writes zeros on the last
  ``floor(b**k_i / z(i))`` positions. The zero tails shrink relative to the
  block exactly when ``z(i) -> inf``.
* ``f_d2`` splits each block in three: a copy of x, a zero run of length
  about ``b**k_i / z(2i)`` and a replay of x starting at ``b**k_{i-1}`` of
  length ``floor(b**k_i / z(2i+1))``. Even entries of z govern the zero
  runs (digit frequencies), odd entries govern the replays (fresh words).

Block boundaries ``(1 - t) * b**k`` are rounded up to the next integer.
Past the last scheduled block the streams follow x.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .digits import DigitStream, digit_dtype
from .errors import PreconditionError, ResourceCapError

FLAVORS = ("boldfast", "light", "d2bold", "d2light")
DEFAULT_MAX_POSITIONS = 1 << 30


# ---------------------------------------------------------------------------
# z sequences


@dataclass(frozen=True)
class TailRule:
    """``z(n) = slope * n + offset`` for indices past the explicit prefix."""

    slope: int
    offset: int

    @classmethod
    def const(cls, c: int) -> "TailRule":
        return cls(0, c)

    @classmethod
    def identity(cls) -> "TailRule":
        return cls(1, 2)

    def __call__(self, n: int) -> int:
        return self.slope * n + self.offset

    @property
    def diverges(self) -> bool:
        return self.slope > 0

    def to_spec(self) -> str:
        if self.slope == 0:
            return f"const:{self.offset}"
        if (self.slope, self.offset) == (1, 2):
            return "id"
        return f"affine:{self.slope}:{self.offset}"

    @classmethod
    def parse(cls, text: str) -> "TailRule":
        text = text.strip()
        if text == "id":
            return cls.identity()
        m = re.fullmatch(r"const:(\d+)", text)
        if m:
            return cls.const(int(m.group(1)))
        m = re.fullmatch(r"affine:(\d+):(-?\d+)", text)
        if m:
            return cls(int(m.group(1)), int(m.group(2)))
        raise PreconditionError(f"bad tail rule {text!r} (use const:C, id or affine:A:C)")


@dataclass(frozen=True)
class ZSequence:
    """A finitely described z: explicit values ``z(1), z(2), ...`` then tail
    rules for even and odd indices. ``z(0)`` never enters a construction."""

    prefix: tuple[int, ...] = ()
    even: TailRule = field(default_factory=TailRule.identity)
    odd: TailRule = field(default_factory=TailRule.identity)

    def __call__(self, n: int) -> int:
        if n < 1:
            raise PreconditionError("z is indexed from 1")
        if n <= len(self.prefix):
            return self.prefix[n - 1]
        return (self.even if n % 2 == 0 else self.odd)(n)

    @classmethod
    def parse(cls, text: str) -> "ZSequence":
        """Parse ``"even=const:4,odd=id"``, ``"3,4,5;tail=const:2"`` or a mix
        such as ``"3,4;even=id,odd=const:4"``."""
        prefix: tuple[int, ...] = ()
        rules: dict[str, TailRule] = {}
        for part in filter(None, (p.strip() for p in text.split(";"))):
            if "=" not in part:
                if prefix:
                    raise PreconditionError(f"two explicit prefixes in {text!r}")
                try:
                    prefix = tuple(int(v) for v in part.split(","))
                except ValueError:
                    raise PreconditionError(f"bad explicit z values {part!r}") from None
                continue
            for item in part.split(","):
                key, _, rule = item.partition("=")
                key = key.strip()
                if key not in ("even", "odd", "tail"):
                    raise PreconditionError(f"unknown z-spec key {key!r}")
                rules[key] = TailRule.parse(rule)
        if "tail" in rules:
            if "even" in rules or "odd" in rules:
                raise PreconditionError("use either tail= or even=/odd=, not both")
            rules["even"] = rules["odd"] = rules.pop("tail")
        if not rules and not prefix:
            raise PreconditionError("empty z-spec")
        if not rules:
            raise PreconditionError("z-spec needs a tail rule (tail=, or even= and odd=)")
        missing = {"even", "odd"} - set(rules)
        if missing:
            raise PreconditionError(f"z-spec missing rule for {sorted(missing)}")
        return cls(prefix, rules["even"], rules["odd"])

    def to_spec(self) -> str:
        rules = (
            f"tail={self.even.to_spec()}"
            if self.even == self.odd
            else f"even={self.even.to_spec()},odd={self.odd.to_spec()}"
        )
        return ";".join(filter(None, [",".join(map(str, self.prefix)), rules]))


def classify_z(z: ZSequence) -> dict[str, bool]:
    """Membership of z in C (even entries diverge) and D (odd entries diverge)."""
    return {"in_C": z.even.diverges, "in_D": z.odd.diverges}


def pow2_at_least(v: int) -> int:
    return 1 << max(0, v - 1).bit_length()


def d2_value(z: ZSequence, n: int) -> int:
    """z(n) rounded up to a power of two, and at least 4."""
    return pow2_at_least(max(z(n), 4))


# ---------------------------------------------------------------------------
# schedules and layouts


@dataclass(frozen=True)
class Block:
    """Step i of a layout. Every interval is a half-open range of positions."""

    step: int
    k_prev: int
    k: int
    start: int  # b**k_prev
    stop: int  # b**k
    copy_stop: int  # end of the copied head
    zero_stop: int  # end of the zero run; equals stop for bold blocks
    z_values: tuple[int, ...]  # (z(i),) or (z(2i), z(2i+1)) as used

    @property
    def length(self) -> int:
        return self.stop - self.start

    @property
    def copy(self) -> tuple[int, int]:
        return (self.start, self.copy_stop)

    @property
    def zeros(self) -> tuple[int, int]:
        return (self.copy_stop, self.zero_stop)

    @property
    def replay(self) -> tuple[int, int]:
        return (self.zero_stop, self.stop)

    @property
    def replay_source(self) -> tuple[int, int]:
        return (self.start, self.start + self.stop - self.zero_stop)

    @property
    def replay_within_copy(self) -> bool:
        return self.replay_source[1] <= self.copy_stop


@dataclass(frozen=True)
class Schedule:
    flavor: str
    base: int
    exponents: tuple[int, ...]  # k_0 < k_1 < ...
    blocks: tuple[Block, ...]
    z: ZSequence
    rule: str

    @property
    def steps(self) -> int:
        return len(self.exponents) - 1

    def to_dict(self) -> dict:
        return {
            "flavor": self.flavor,
            "base": self.base,
            "exponents": list(self.exponents),
            "rule": self.rule,
            "z": self.z.to_spec(),
            "blocks": [
                {
                    "step": bl.step,
                    "k": bl.k,
                    "start": bl.start,
                    "copy_stop": bl.copy_stop,
                    "zero_stop": bl.zero_stop,
                    "stop": bl.stop,
                    "z": list(bl.z_values),
                }
                for bl in self.blocks
            ],
        }


def _boldfast_next(prev: int, i: int) -> int:
    return 2 * prev + i + 2


def _ceil_frac(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def bold_block(base: int, i: int, k_prev: int, k: int, zi: int) -> Block:
    start, stop = base**k_prev, base**k
    copy_stop = _ceil_frac((1 - Fraction(1, zi)) * stop)
    if copy_stop <= start:
        raise PreconditionError(f"step {i}: copied head [{start}, {copy_stop}) is empty")
    return Block(i, k_prev, k, start, stop, copy_stop, stop, (zi,))


def d2_block(base: int, i: int, k_prev: int, k: int, z_even: int, z_odd: int) -> Block:
    if Fraction(1, z_even) + Fraction(1, z_odd) > Fraction(1, 2):
        raise PreconditionError(f"step {i}: 1/{z_even} + 1/{z_odd} exceeds 1/2")
    start, stop = base**k_prev, base**k
    copy_stop = _ceil_frac((1 - Fraction(1, z_even) - Fraction(1, z_odd)) * stop)
    zero_stop = _ceil_frac((1 - Fraction(1, z_odd)) * stop)
    if copy_stop <= start:
        raise PreconditionError(f"step {i}: copied head [{start}, {copy_stop}) is empty")
    return Block(i, k_prev, k, start, stop, copy_stop, zero_stop, (z_even, z_odd))


def build_schedule(
    flavor: str,
    z: ZSequence,
    steps: int,
    base: int = 2,
    *,
    k0: int | None = None,
    exponents: Sequence[int] | None = None,
    max_positions: int = DEFAULT_MAX_POSITIONS,
) -> Schedule:
    """Exponents ``k_0 < ... < k_steps`` and the block layout for ``flavor``.

    Rules when ``exponents`` is not given:

    * ``boldfast``: ``k_i = 2 k_{i-1} + i + 2`` from ``k_0 = 1``;
    * ``light``: least integer above both ``k_{i-1}`` and ``z(i)``, ``k_0 = 0``;
    * ``d2bold``: ``k_i = 2 k_{i-1}`` from ``k_0 = 2``;
    * ``d2light``: least power of two above both ``k_{i-1}`` and ``z(i)``,
      ``k_0 = 1``.

    Explicit exponents are validated against the flavor instead.
    """
    if flavor not in FLAVORS:
        raise PreconditionError(f"unknown flavor {flavor!r}; expected one of {FLAVORS}")
    if steps < 1:
        raise PreconditionError("steps must be >= 1")
    d2 = flavor.startswith("d2")

    if d2:
        zvals = {n: z(n) for n in range(1, 2 * steps + 2)}
    else:
        zvals = {n: z(n) for n in range(1, steps + 1)}
    low = [n for n, v in zvals.items() if v < 2]
    if low:
        raise PreconditionError(f"z({low[0]}) = {zvals[low[0]]} < 2")

    if exponents is not None:
        ks = [int(v) for v in exponents]
        if len(ks) != steps + 1:
            raise PreconditionError(f"need {steps + 1} exponents, got {len(ks)}")
        rule = "explicit"
    else:
        rule = {
            "boldfast": "k_i = 2k_(i-1) + i + 2",
            "light": "least k_i > max(k_(i-1), z(i))",
            "d2bold": "k_i = 2k_(i-1)",
            "d2light": "least power of 2 k_i > max(k_(i-1), z(i))",
        }[flavor]
        ks = [{"boldfast": 1, "light": 0, "d2bold": 2, "d2light": 1}[flavor] if k0 is None else k0]
        for i in range(1, steps + 1):
            prev = ks[-1]
            if flavor == "boldfast":
                ks.append(_boldfast_next(prev, i))
            elif flavor == "light":
                ks.append(max(prev, z(i)) + 1)
            elif flavor == "d2bold":
                ks.append(2 * prev if prev else 1)
            else:
                ks.append(pow2_at_least(max(prev, z(i)) + 1))

    for i in range(1, len(ks)):
        if ks[i] <= ks[i - 1]:
            raise PreconditionError(f"exponents not strictly increasing at step {i}: {ks}")
        if flavor == "boldfast" and ks[i] <= 2 * ks[i - 1]:
            raise PreconditionError(f"boldfast needs k_i > 2 k_(i-1); step {i} has {ks[i]} <= {2 * ks[i - 1]}")
        if flavor == "light" and ks[i] <= z(i):
            raise PreconditionError(f"light needs k_i > z(i); step {i} has {ks[i]} <= {z(i)}")
        # room for the block-start drift i - 1 that the counting argument needs
        if base ** ks[i] - base ** ks[i - 1] <= i - 1:
            raise PreconditionError(f"step {i}: b**k_i - b**k_(i-1) must exceed {i - 1}")
    if d2:
        bad = [v for v in ks if v < 1 or v & (v - 1)]
        if bad:
            raise PreconditionError(f"{flavor} exponents must be powers of two, got {ks}")
        if flavor == "d2light":
            for i in range(1, len(ks)):
                if ks[i] <= z(i):
                    raise PreconditionError(f"d2light needs k_i > z(i); step {i} has {ks[i]} <= {z(i)}")
    if base ** ks[-1] > max_positions:
        raise ResourceCapError(f"{base}**{ks[-1]} positions exceed the cap of {max_positions}")

    blocks = []
    for i in range(1, len(ks)):
        if d2:
            blocks.append(d2_block(base, i, ks[i - 1], ks[i], d2_value(z, 2 * i), d2_value(z, 2 * i + 1)))
        else:
            blocks.append(bold_block(base, i, ks[i - 1], ks[i], z(i)))
    return Schedule(flavor, base, tuple(ks), tuple(blocks), z, rule)


# ---------------------------------------------------------------------------
# streams


class ConstructionStream(DigitStream):
    kind = "construction"

    def __init__(self, schedule: Schedule, x: DigitStream):
        super().__init__(schedule.base)
        if x.base != schedule.base:
            raise PreconditionError(f"x has base {x.base}, schedule base {schedule.base}")
        self.schedule = schedule
        self.x = x
        self.length = x.length

    def params(self):
        return {"schedule": self.schedule.to_dict(), "x": self.x.descriptor()}

    def take(self, n: int) -> np.ndarray:
        out = self.x.take(n)
        src = out.copy() if self.schedule.flavor.startswith("d2") else None
        for bl in self.schedule.blocks:
            if bl.start > n:
                break
            lo, hi = bl.zeros
            out[lo - 1 : min(hi, n + 1) - 1] = 0
            lo, hi = bl.replay
            if src is not None and lo <= n:
                s0 = bl.replay_source[0]
                length = min(hi, n + 1) - lo
                out[lo - 1 : lo - 1 + length] = src[s0 - 1 : s0 - 1 + length]
        return out

    def chunks(self):
        total = self.schedule.base ** self.schedule.exponents[-1]
        yield self.take(total)
        xs = self.x.chunks()
        skipped = 0
        for chunk in xs:
            if skipped + chunk.size <= total:
                skipped += chunk.size
                continue
            yield chunk[max(0, total - skipped) :]
            skipped += chunk.size
            break
        yield from xs


def f_bold(z: ZSequence, schedule: Schedule, x: DigitStream) -> ConstructionStream:
    """x on each copied head, zeros on the last ``floor(b**k_i / z(i))`` positions of B_i."""
    if schedule.flavor not in ("boldfast", "light"):
        raise PreconditionError(f"f_bold needs a boldfast or light schedule, got {schedule.flavor}")
    if schedule.z != z:
        raise PreconditionError("schedule was built for a different z")
    return ConstructionStream(schedule, x)


def f_d2(z: ZSequence, schedule: Schedule, x: DigitStream) -> ConstructionStream:
    """x on the head, zeros in the middle, a replay of x from ``b**k_{i-1}`` at the end."""
    if schedule.flavor not in ("d2bold", "d2light"):
        raise PreconditionError(f"f_d2 needs a d2bold or d2light schedule, got {schedule.flavor}")
    if schedule.z != z:
        raise PreconditionError("schedule was built for a different z")
    return ConstructionStream(schedule, x)
