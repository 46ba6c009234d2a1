"""The four power-of-two parameter families and their verification harnesses."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional

from .census import Cycle, canonicalize, census, verify_cycle
from .errors import BadNu, RelationViolation
from .maps import Caps, MapParams, new_map, step, trajectory, trivial_cycles


class FamilyKind(enum.Enum):
    PlusPlus = "PlusPlus"  # a = 2^nu + 1, b = 2^nu - 1
    MinusPlus = "MinusPlus"  # a = 2^nu - 1, b = 2^nu + 1
    PlusMinus = "PlusMinus"  # a = 2^nu + 1, b = -(2^nu - 1)
    MinusOne = "MinusOne"  # a = 2^nu - 1, b = 1

    @classmethod
    def parse(cls, text: str) -> "FamilyKind":
        for kind in cls:
            if kind.value.lower() == text.lower().replace("-", "").replace("_", ""):
                return kind
        raise ValueError(f"unknown family {text!r}; choose from {[k.value for k in cls]}")


def family_map(kind: FamilyKind, nu: int) -> MapParams:
    min_nu = 2 if kind is FamilyKind.MinusOne else 1
    if nu < min_nu:
        raise BadNu(f"{kind.value} needs nu >= {min_nu}, got {nu}")
    p = 1 << nu
    a, b = {
        FamilyKind.PlusPlus: (p + 1, p - 1),
        FamilyKind.MinusPlus: (p - 1, p + 1),
        FamilyKind.PlusMinus: (p + 1, 1 - p),
        FamilyKind.MinusOne: (p - 1, 1),
    }[kind]
    return new_map(a, b)


def family_trivial_schema(kind: FamilyKind, nu: int) -> list[tuple[int, int]]:
    """(omega, length) of the power-of-two cycles each family is stated to carry."""
    m = family_map(kind, nu)
    if kind is FamilyKind.PlusPlus:
        out = [(1, nu + 1)]
    elif kind is FamilyKind.MinusPlus:
        out = [(1, nu + 1), (m.b, nu)]
    elif kind is FamilyKind.PlusMinus:
        out = [(1, 1), (-m.b, nu)]
    else:
        out = [(1, nu)]
    return sorted(set(out))


# ------------------------------------------------------------------ A_nu

@dataclass(frozen=True)
class ANu:
    nu: int
    value_numerator: int  # a^nu - 1
    denominator: int  # b
    is_integer: bool
    A: Optional[int]
    floor: int
    bracket_holds: Optional[bool]  # nu(nu-1) < A_nu < nu(nu-1) + 1, checked for nu >= 3


def a_nu(nu: int) -> ANu:
    """A_nu = log2((a^nu - 1) / b) for the PlusPlus family, decided in integers."""
    m = family_map(FamilyKind.PlusPlus, nu)
    num, b = m.a**nu - 1, m.b
    A = None
    if num % b == 0:
        q = num // b
        if q & (q - 1) == 0:
            A = q.bit_length() - 1
    # floor(log2(num/b)) = largest e with b * 2^e <= num
    floor = (num // b).bit_length() - 1
    bracket = None
    if nu >= 3:
        e = nu * (nu - 1)
        bracket = (b << e) < num < (b << (e + 1))
    return ANu(nu, num, b, A is not None, A, floor, bracket)


@dataclass(frozen=True)
class OmegaB:
    nu: int
    exists: bool
    cycle: Optional[Cycle]


def omega_b_cycle_exists(nu: int) -> OmegaB:
    """The cycle through b exists exactly when A_nu is an integer."""
    info = a_nu(nu)
    if not info.is_integer:
        return OmegaB(nu, False, None)
    m = family_map(FamilyKind.PlusPlus, nu)
    length = nu + info.A
    orbit = [m.b]
    for _ in range(length - 1):
        orbit.append(step(m, orbit[-1]))
    if step(m, orbit[-1]) != m.b or not verify_cycle(m, orbit):
        raise RelationViolation(f"constructed Omega(b) for nu={nu} does not close")
    return OmegaB(nu, True, canonicalize(orbit, m))


# ------------------------------------------------------------ expansion

@dataclass(frozen=True)
class ExpansionWitness:
    nu: int
    k: int
    n: int
    identities_hold: bool
    peak: int  # T^(k-1)(n) = 2 a^(k-1) - 1
    ratio: Fraction
    ratio_bound_holds: bool


def expansion_witness(nu: int, k: int) -> ExpansionWitness:
    """Check T^j(2^k - 1) = a^j 2^(k-j) - 1 for j < k and s(n) > (a/2)^(k-1)."""
    if k < 2:
        raise ValueError("k must be >= 2")
    m = family_map(FamilyKind.PlusPlus, nu)
    a = m.a
    n = (1 << k) - 1
    v = n
    ok = True
    for j in range(k):
        ok &= v == a**j * (1 << (k - j)) - 1
        if j < k - 1:
            v = step(m, v)
    ratio = Fraction(v, n)
    return ExpansionWitness(nu, k, n, ok, v, ratio, ratio > Fraction(a, 2) ** (k - 1))


@dataclass(frozen=True)
class ExpansionUnresolved:
    reason: str
    running_max: int


def expansion_factor(m: MapParams, n: int, caps: Caps = Caps()) -> Fraction | ExpansionUnresolved:
    """s(n) = max of the orbit of n divided by n, exact when the orbit closes."""
    if n < 1:
        raise ValueError("n must be positive")
    t = trajectory(m, n, caps)
    peak = max(t.steps)
    if t.entered_cycle:
        return Fraction(peak, n)
    return ExpansionUnresolved("StepCap" if t.terminal.kind == "steps" else "ValueCap", peak)


# ------------------------------------------------------ expected tables

@dataclass(frozen=True)
class ExpectedCycleTable:
    label: str
    a: int
    b: int
    cycles: tuple[tuple[int, int, tuple[int, ...]], ...]  # (omega, length, elements)
    exhaustive: bool  # the table claims these are all cycles and every n reaches one
    schema: bool = False  # generated from a family's power-of-two cycles

    @property
    def map(self) -> MapParams:
        return new_map(self.a, self.b)

    @property
    def omegas(self) -> list[int]:
        return [c[0] for c in self.cycles]

    def verify(self) -> list[str]:
        """Problems with the table itself; empty when every entry is a genuine cycle."""
        m = self.map
        problems = []
        for omega, length, els in self.cycles:
            if not verify_cycle(m, els):
                problems.append(f"{self.label}: Omega({omega}) is not a cycle")
            elif min(els) != omega or len(els) != length:
                problems.append(f"{self.label}: Omega({omega}) has wrong minimum or length")
        return problems


def _entry(*els: int) -> tuple[int, int, tuple[int, ...]]:
    return (min(els), len(els), tuple(els))


_REFERENCE_TABLES = [
    ("(5,3)", 5, 3, False, [
        (1, 4, 2),
        (3, 9, 24, 12, 6),
        (39, 99, 249, 624, 312, 156, 78),
        (43, 109, 274, 137, 344, 172, 86),
        (51, 129, 324, 162, 81, 204, 102),
        (53, 134, 67, 169, 424, 212, 106),
        (61, 154, 77, 194, 97, 244, 122),
    ]),
    ("(3,5)", 3, 5, True, [
        (1, 4, 2),
        (5, 10),
        (19, 31, 49, 76, 38),
        (23, 37, 58, 29, 46),
        (187, 283, 427, 643, 967, 1453, 2182, 1091, 1639, 2461, 3694, 1847, 2773, 4162,
         2081, 3124, 1562, 781, 1174, 587, 883, 1327, 1993, 2992, 1496, 748, 374),
        (347, 523, 787, 1183, 1777, 2668, 1334, 667, 1003, 1507, 2263, 3397, 5098, 2549,
         3826, 1913, 2872, 1436, 718, 359, 541, 814, 407, 613, 922, 461, 694),
    ]),
    ("(3,-1)", 3, -1, True, [
        (1,),
        (5, 7, 10),
        (17, 25, 37, 55, 82, 41, 61, 91, 136, 68, 34),
    ]),
    ("(7,9)", 7, 9, False, [(1, 8, 4, 2), (9, 36, 18)]),
    ("(9,-7)", 9, -7, False, [(1,), (7, 28, 14)]),
]

SCHEMA_NUS = range(1, 5)


def schema_table(kind: FamilyKind, nu: int) -> ExpectedCycleTable:
    m = family_map(kind, nu)
    entries = []
    for omega, length in family_trivial_schema(kind, nu):
        els = [omega] + [omega << e for e in range(length - 1, 0, -1)]
        entries.append(_entry(*els))
    return ExpectedCycleTable(f"{kind.value}(nu={nu})", m.a, m.b, tuple(entries), False, schema=True)


@lru_cache(maxsize=1)
def conjecture_tables() -> tuple[ExpectedCycleTable, ...]:
    """Enumerated cycle data for the worked maps plus each family's trivial cycles.

    Every table is verified on construction; a bad entry raises RelationViolation.
    """
    tables = [
        ExpectedCycleTable(label, a, b, tuple(_entry(*els) for els in cycles), exhaustive)
        for label, a, b, exhaustive, cycles in _REFERENCE_TABLES
    ]
    for kind in FamilyKind:
        for nu in SCHEMA_NUS:
            if kind is FamilyKind.MinusOne and nu < 2:
                continue
            tables.append(schema_table(kind, nu))
    for t in tables:
        problems = t.verify()
        if problems:
            raise RelationViolation("; ".join(problems))
    return tuple(tables)


def table_for(a: int, b: int) -> Optional[ExpectedCycleTable]:
    for t in conjecture_tables():
        if (t.a, t.b) == (a, b) and not t.schema:
            return t
    return None


# ------------------------------------------------------- family suite

FAMILY_CENSUS_N = 2000
FAMILY_CENSUS_CAPS = Caps(max_steps=10**4, max_value=2**128)


def verify_family(kind: FamilyKind, nu: int, N: int = FAMILY_CENSUS_N,
                  caps: Caps = FAMILY_CENSUS_CAPS) -> dict:
    """Run every check that applies to the family member and summarize as JSON-ready data."""
    m = family_map(kind, nu)
    checks: dict[str, bool] = {}
    expected = family_trivial_schema(kind, nu)
    got = sorted((c.omega, c.length) for c in trivial_cycles(m))
    checks["trivial_cycles_match_schema"] = got == expected
    checks["trivial_cycles_iterate"] = all(
        verify_cycle(m, c.elements) for c in trivial_cycles(m)
    )
    checks["a_plus_b_power_of_two"] = m.nu0 is not None
    report = census(m, N, caps)
    found = {(c.omega, c.length) for c in report.cycles}
    reachable = [(o, l) for o, l in expected if o <= N]
    checks["census_finds_trivial_cycles"] = all(e in found for e in reachable)
    if kind is FamilyKind.PlusPlus:
        info = a_nu(nu)
        ob = omega_b_cycle_exists(nu)
        checks["a_nu_integral_iff_nu_le_2"] = info.is_integer == (nu <= 2)
        if nu >= 3:
            checks["a_nu_bracket"] = bool(info.bracket_holds)
        checks["omega_b_exists_iff_a_nu_integral"] = ob.exists == info.is_integer
        checks["expansion_witness"] = all(
            w.identities_hold and w.ratio_bound_holds
            for w in (expansion_witness(nu, k) for k in range(2, 33))
        )
    table = table_for(m.a, m.b)
    if table is not None:
        missing = [o for o in table.omegas if o <= N and o not in report.omegas]
        checks["census_finds_table_cycles"] = not missing
        if table.exhaustive:
            # a census of [1, N] can only meet cycles whose minimum is at most N
            within = sorted(o for o in table.omegas if o <= N)
            checks["census_exactly_table"] = (
                report.omegas == within and report.unresolved_count == 0
            )
    return {
        "family": kind.value,
        "nu": nu,
        "a": m.a,
        "b": m.b,
        "N": N,
        "census": {
            "cycles": [[c.omega, c.length] for c in report.cycles],
            "unresolved_count": report.unresolved_count,
        },
        "checks": checks,
        "passed": all(checks.values()),
    }
