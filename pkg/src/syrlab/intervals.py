"""Rational interval arithmetic and a certified ln(2).

Every transcendental quantity used in a certified decision is carried as a
closed interval with Fraction endpoints; no floating point is involved.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Union

from .errors import InconclusivePrecision

Number = Union[int, Fraction]

REFINE_BITS = (32, 64, 128, 256)


@dataclass(frozen=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", Fraction(self.lo))
        object.__setattr__(self, "hi", Fraction(self.hi))
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, x: Number) -> "Interval":
        return cls(Fraction(x), Fraction(x))

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def contains(self, x: Number) -> bool:
        return self.lo <= x <= self.hi

    def __add__(self, other):
        o = _lift(other)
        return Interval(self.lo + o.lo, self.hi + o.hi)

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other):
        return self + (-_lift(other))

    def __rsub__(self, other):
        return _lift(other) - self

    def __mul__(self, other):
        o = _lift(other)
        p = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return Interval(min(p), max(p))

    __rmul__ = __mul__

    def reciprocal(self) -> "Interval":
        if self.lo <= 0 <= self.hi:
            raise ZeroDivisionError("interval contains zero")
        return Interval(1 / self.hi, 1 / self.lo)

    def __truediv__(self, other):
        return self * _lift(other).reciprocal()

    def __rtruediv__(self, other):
        return _lift(other) * self.reciprocal()

    def certainly_lt(self, other) -> bool:
        return self.hi < _lift(other).lo

    def certainly_gt(self, other) -> bool:
        return self.lo > _lift(other).hi

    def __repr__(self):
        return f"Interval({float(self.lo):.12g}, {float(self.hi):.12g})"


def _lift(x) -> Interval:
    return x if isinstance(x, Interval) else Interval.point(x)


@lru_cache(maxsize=32)
def ln2_interval(bits: int) -> Interval:
    """Enclosure of ln 2 of width <= 2**-bits.

    Uses ln 2 = 2 * atanh(1/3) = sum_k 2 / ((2k+1) * 3**(2k+1)) in scaled
    integer arithmetic: each term is floored for the lower sum and ceiled
    for the upper sum, and the geometric tail bound is added to the upper.
    """
    # about bits/3 terms, each rounded by at most one unit, plus the tail
    scale_bits = bits + 4 + bits.bit_length()
    one = 1 << scale_bits
    lo_sum = hi_sum = 0
    k = 0
    while True:
        den = (2 * k + 1) * 3 ** (2 * k + 1)
        num = 2 * one
        lo_sum += num // den
        hi_sum += -(-num // den)
        k += 1
        # tail sum_{j>=k} 2/((2j+1) 3^(2j+1)) <= 2/((2k+1) 3^(2k+1)) * 9/8
        tail_den = (2 * k + 1) * 3 ** (2 * k + 1) * 8
        tail = -(-(2 * 9 * one) // tail_den)
        if tail <= 2:
            hi_sum += tail
            break
    return Interval(Fraction(lo_sum, one), Fraction(hi_sum, one))


def decide(check: Callable[[int], bool | None], what: str = "comparison") -> bool:
    """Run ``check(bits)`` at increasing precision until it returns a bool.

    ``check`` returns None while inconclusive.  Gives up at 256 bits.
    """
    for bits in REFINE_BITS:
        verdict = check(bits)
        if verdict is not None:
            return verdict
    raise InconclusivePrecision(f"{what} undecided at {REFINE_BITS[-1]} bits")


def grid_outward(iv: Interval, width: Fraction) -> Interval:
    """Round an enclosure outward onto the grid of step width/2.

    The result still encloses ``iv`` and has width <= ``width`` as long as
    ``iv.width`` is at most width/2.
    """
    step = Fraction(width) / 2
    lo = (iv.lo // step) * step
    hi = -((-iv.hi) // step) * step
    return Interval(lo, hi)
