"""The generalized Syracuse map T(n) = n/2 (n even), (a*n + b)/2 (n odd).

All arithmetic is on Python ints, so nothing here can overflow.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from typing import Optional

from .errors import EvenParameter, NonPositiveSum

DEFAULT_MAX_STEPS = 10**6
DEFAULT_MAX_VALUE = 2**128


def _power_of_two_exponent(x: int) -> Optional[int]:
    if x >= 1 and x & (x - 1) == 0:
        return x.bit_length() - 1
    return None


@dataclass(frozen=True)
class MapParams:
    """Validated parameters (a, b) plus the power-of-two decompositions.

    ``nu0`` is set when a + b == 2**nu0.  ``nu1_delta`` is (nu1, delta) with
    a == 2**nu1 - delta; when a admits two such forms (only a == 3), the one
    with delta*b > 0 is preferred so the second trivial cycle is exposed.
    """

    a: int
    b: int
    nu0: Optional[int] = field(default=None, compare=False)
    nu1_delta: Optional[tuple[int, int]] = field(default=None, compare=False)

    def __str__(self) -> str:
        return f"T[{self.a},{self.b}]"


def _nu1_delta(a: int, b: int) -> Optional[tuple[int, int]]:
    options = []
    for delta in (1, -1):
        nu1 = _power_of_two_exponent(a + delta)
        if nu1 is not None and nu1 >= 1:
            options.append((nu1, delta))
    if not options:
        return None
    for nu1, delta in options:
        if delta * b > 0:
            return (nu1, delta)
    return options[0]


def new_map(a: int, b: int) -> MapParams:
    """Validate (a, b) and fill in the derived decompositions."""
    a, b = int(a), int(b)
    if a % 2 == 0 or b % 2 == 0:
        raise EvenParameter(f"a and b must both be odd, got a={a}, b={b}")
    if a < 1:
        raise EvenParameter(f"a must be a positive odd integer, got {a}")
    if a <= -b:
        raise NonPositiveSum(f"need a > -b, got a={a}, b={b}")
    return MapParams(a, b, _power_of_two_exponent(a + b), _nu1_delta(a, b))


def step(m: MapParams, n: int) -> int:
    if n & 1:
        return (m.a * n + m.b) >> 1
    return n >> 1


def iterate(m: MapParams, n: int, k: int) -> int:
    a, b = m.a, m.b
    for _ in range(k):
        n = (a * n + b) >> 1 if n & 1 else n >> 1
    return n


@dataclass(frozen=True)
class Caps:
    max_steps: int = DEFAULT_MAX_STEPS
    max_value: int = DEFAULT_MAX_VALUE

    def __post_init__(self):
        if self.max_steps < 1 or self.max_value < 1:
            raise ValueError("caps must be positive")

    @classmethod
    def from_env(cls, max_steps: Optional[int] = None, max_value: Optional[int] = None) -> "Caps":
        """Explicit arguments win, then SYRLAB_MAX_STEPS / SYRLAB_MAX_VALUE."""
        if max_steps is None:
            env = os.environ.get("SYRLAB_MAX_STEPS")
            max_steps = parse_int(env) if env else DEFAULT_MAX_STEPS
        if max_value is None:
            env = os.environ.get("SYRLAB_MAX_VALUE")
            max_value = parse_int(env) if env else DEFAULT_MAX_VALUE
        return cls(max_steps, max_value)


def parse_int(text: str) -> int:
    """Parse an integer written plainly or as a product of powers: "5*2**60", "2^128"."""
    text = text.strip().replace("^", "**").replace(" ", "")
    if not re.fullmatch(r"-?\d+(\*\*\d+)?(\*\d+(\*\*\d+)?)*", text):
        raise ValueError(f"not an integer expression: {text!r}")
    value = 1
    for factor in re.split(r"(?<!\*)\*(?!\*)", text):
        base, _, exp = factor.partition("**")
        value *= int(base) ** int(exp) if exp else int(base)
    return value


@dataclass(frozen=True)
class EnteredCycle:
    at: int  # index in steps of the first occurrence of the repeated value


@dataclass(frozen=True)
class CapExceeded:
    kind: str  # "steps" or "value"


@dataclass(frozen=True)
class Trajectory:
    start: int
    steps: tuple[int, ...]
    terminal: EnteredCycle | CapExceeded

    @property
    def entered_cycle(self) -> bool:
        return isinstance(self.terminal, EnteredCycle)

    def cycle(self) -> tuple[int, ...]:
        """Elements of the cycle the orbit fell into, in orbit order."""
        if not isinstance(self.terminal, EnteredCycle):
            return ()
        return self.steps[self.terminal.at:-1]


def trajectory(m: MapParams, n: int, caps: Caps = Caps()) -> Trajectory:
    """Record iterates of n until a value repeats or a cap trips.

    The repeated value is appended as the last element, so
    ``steps[terminal.at] == steps[-1]``.  A value above ``max_value`` is
    recorded before stopping.
    """
    if n < 1:
        raise ValueError("n must be positive")
    a, b = m.a, m.b
    path = [n]
    seen = {n: 0}
    v = n
    while True:
        if len(path) > caps.max_steps:
            return Trajectory(n, tuple(path), CapExceeded("steps"))
        v = (a * v + b) >> 1 if v & 1 else v >> 1
        path.append(v)
        if v > caps.max_value:
            return Trajectory(n, tuple(path), CapExceeded("value"))
        first = seen.get(v)
        if first is not None:
            return Trajectory(n, tuple(path), EnteredCycle(first))
        seen[v] = len(path) - 1


@dataclass(frozen=True)
class TrivialCycleSpec:
    omega: int
    length: int
    elements: tuple[int, ...]


@dataclass(frozen=True)
class TrivialCycles:
    """Result of :func:`trivial_cycles`; iterable like a list of specs."""

    cycles: tuple[TrivialCycleSpec, ...]
    no_power_structure: bool = False

    def __iter__(self):
        return iter(self.cycles)

    def __len__(self):
        return len(self.cycles)

    def __getitem__(self, i):
        return self.cycles[i]


def _power_cycle(omega: int, length: int) -> TrivialCycleSpec:
    # omega -> omega*2^(len-1) -> ... -> omega*2
    elements = (omega,) + tuple(omega << e for e in range(length - 1, 0, -1))
    return TrivialCycleSpec(omega, length, elements)


def trivial_cycles(m: MapParams) -> TrivialCycles:
    """Power-of-two cycles forced by a + b = 2**nu0 and a = 2**nu1 - delta.

    Returns an empty result flagged ``no_power_structure`` when a + b is not
    a power of two.
    """
    if m.nu0 is None:
        return TrivialCycles((), no_power_structure=True)
    found = [_power_cycle(1, m.nu0)]
    if m.nu1_delta is not None:
        nu1, delta = m.nu1_delta
        db = delta * m.b
        if db > 0 and db != 1:
            found.append(_power_cycle(db, nu1))
    return TrivialCycles(tuple(found))


def divisibility_obstruction(m: MapParams, n: int) -> bool:
    """True when b > 1 divides n: then b divides every iterate, so 1 is never reached."""
    return m.b > 1 and n % m.b == 0
