"""Rise/fall structure of cycles and the one-oscillation exclusion search.

A cycle splits into m oscillations: starting at an odd local minimum x_i,
k_i odd steps climb to an even local maximum y_i, then l_i halvings fall to
the next minimum x_{i+1}.  Each rise obeys the exact identity

    y_i = (a/2)**k_i * x_i + b/(a-2) * ((a/2)**k_i - 1) = 2**l_i * x_{i+1}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from .bounds import _as_mu, defect_interval
from .census import Cycle
from .diophantine import floor_xi_times
from .errors import DegenerateA, NoOscillation, NonPositiveB, RelationViolation, WrongFamily
from .intervals import decide, ln2_interval
from .maps import MapParams, step


def rise_value(a: int, b: int, x: int, k: int) -> Fraction:
    """Right-hand side of the rise identity, in exact rationals."""
    r = Fraction(a, 2) ** k
    return r * x + Fraction(b, a - 2) * (r - 1)


@dataclass(frozen=True)
class OscillationDecomposition:
    x: tuple[int, ...]
    y: tuple[int, ...]
    k: tuple[int, ...]
    l: tuple[int, ...]
    min_element: int

    @property
    def m(self) -> int:
        return len(self.x)

    @property
    def K(self) -> int:
        return sum(self.k)

    @property
    def L(self) -> int:
        return sum(self.l)

    def reassemble(self, m: MapParams) -> tuple[int, ...]:
        """Rebuild the cycle from x_0 by k_i odd steps then l_i halvings."""
        out = []
        v = self.x[0]
        for ki, li in zip(self.k, self.l):
            for _ in range(ki):
                out.append(v)
                v = step(m, v)
            for _ in range(li):
                out.append(v)
                v >>= 1
        return tuple(out)


def decompose(m: MapParams, cycle: Cycle) -> OscillationDecomposition:
    """Split a cycle at parity changes and verify every rise identity."""
    if m.a < 3:
        raise DegenerateA(f"odd steps do not rise for a={m.a}")
    els = cycle.elements
    n = len(els)
    if cycle.K == 0 or cycle.L == 0:
        raise NoOscillation(f"cycle {els[:5]}... needs both odd and even elements")
    # rotate to an odd element preceded by an even one
    start = next(i for i in range(n) if els[i] & 1 and not els[i - 1] & 1)
    seq = els[start:] + els[:start]
    xs, ys, ks, ls = [], [], [], []
    i = 0
    while i < n:
        x = seq[i]
        k = 0
        while i < n and seq[i] & 1:
            k += 1
            i += 1
        y = seq[i]
        l = 0
        while i < n and not seq[i] & 1:
            l += 1
            i += 1
        xs.append(x)
        ys.append(y)
        ks.append(k)
        ls.append(l)
    dec = OscillationDecomposition(tuple(xs), tuple(ys), tuple(ks), tuple(ls), cycle.omega)
    for i in range(dec.m):
        nxt = dec.x[(i + 1) % dec.m]
        if rise_value(m.a, m.b, dec.x[i], dec.k[i]) != dec.y[i] or dec.y[i] != nxt << dec.l[i]:
            raise RelationViolation(f"rise identity fails at oscillation {i}")
    return dec


@dataclass(frozen=True)
class OscillationDefectCheck:
    sum_form: bool
    coarse_form: bool
    positive: bool

    @property
    def holds(self) -> bool:
        return self.sum_form and self.coarse_form and self.positive


def oscillation_defect_check(m: MapParams, dec: OscillationDecomposition) -> OscillationDefectCheck:
    """Certify 0 < (K+L) - K*xi < b/((a-2) ln2) * sum(1/x_i) and the m*b/((a-2) ln2 min) form."""
    if m.b < 1:
        raise NonPositiveB("needs b >= 1")
    if m.a < 3:
        raise DegenerateA("needs a >= 3")
    K, L = dec.K, dec.L
    inv_sum = sum(Fraction(1, x) for x in dec.x)
    scale = Fraction(m.b, m.a - 2)

    def compare(rhs_value):
        def check(bits):
            d = defect_interval(m.a, K, L, bits)
            rhs = ln2_interval(bits).reciprocal() * rhs_value
            if d.certainly_lt(rhs):
                return True
            if d.lo >= rhs.hi:
                return False
            return None
        return decide(check, "oscillation defect")

    def positive(bits):
        d = defect_interval(m.a, K, L, bits)
        return True if d.lo > 0 else (False if d.hi <= 0 else None)

    return OscillationDefectCheck(
        sum_form=compare(scale * inv_sum),
        coarse_form=compare(scale * Fraction(dec.m, dec.min_element)),
        positive=decide(positive, "defect sign"),
    )


def k_cap_from_mu(mu) -> int:
    """Largest K with 2**K - 1 <= K**mu / ln 2.

    Decided per K on a certified ln 2 enclosure: ((2**K - 1) * ln2)**s versus
    K**r for mu = r/s.  The scan stops at the first failure past 2*mu, where
    K**mu / 2**K is already decreasing.
    """
    mu = _as_mu(mu)
    r, s = mu.numerator, mu.denominator

    def holds(K):
        def check(bits):
            ln2 = ln2_interval(bits)
            lhs_hi = ((2**K - 1) * ln2.hi) ** s
            lhs_lo = ((2**K - 1) * ln2.lo) ** s
            rhs = Fraction(K) ** r
            if lhs_hi <= rhs:
                return True
            if lhs_lo > rhs:
                return False
            return None
        return decide(check, f"K cap at K={K}")

    best = 0
    K = 1
    while True:
        if holds(K):
            best = K
        elif K > 2 * mu:
            return best
        K += 1


@dataclass(frozen=True)
class Candidate:
    K: int
    L: int
    x0: int
    power_divides: bool  # 2**K | x0 + 1


@dataclass
class CircuitSearchReport:
    a: int
    b: int
    nu: int
    mu: Fraction
    K_cap: int
    candidates: list[Candidate]
    impossible: list[int]  # K whose denominator 2**(K+L) - a**K is not positive
    tested: int
    excluded_trivial: list[tuple[int, int]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "CandidatesFound" if self.candidates else "NoNontrivialCircuit"

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "nu": self.nu,
            "mu": str(self.mu),
            "K_cap": self.K_cap,
            "tested_K": [2, self.K_cap],
            "tested": self.tested,
            "candidates": [c.__dict__ for c in self.candidates],
            "structurally_impossible_K": self.impossible,
            "excluded_trivial": [list(t) for t in self.excluded_trivial],
            "verdict": self.verdict,
            "notes": self.notes,
        }


def one_oscillation_search(m: MapParams, mu=None, K_range: Optional[tuple[int, int]] = None) -> CircuitSearchReport:
    """Test every K in [2, K_cap] for an integral one-oscillation minimum x0.

    Applies to a = 2**nu + 1, b = 2**nu - 1, where a single rise and fall
    closes iff x0 = (a**K - 2**K) / (2**(K+L) - a**K) is a positive integer
    with L = 1 - K + floor(K*xi).
    """
    nu = (m.a - 1).bit_length() - 1
    if m.b != m.a - 2 or m.a - 1 != 1 << nu or nu < 1:
        raise WrongFamily(f"need a = 2^nu + 1, b = a - 2; got a={m.a}, b={m.b}")
    if mu is None:
        if m.a != 3:
            raise ValueError("mu must be supplied for a != 3")
        mu = 14
    mu = _as_mu(mu)
    cap = k_cap_from_mu(mu)
    lo, hi = K_range if K_range is not None else (2, cap)
    report = CircuitSearchReport(m.a, m.b, nu, mu, cap, [], [], 0)
    report.notes.append(
        "the exclusion inequality is only guaranteed beyond an ineffective threshold n0; "
        "it is applied here to every K >= 2"
    )
    a = m.a
    for K in range(lo, hi + 1):
        report.tested += 1
        L = 1 - K + floor_xi_times(a, K)
        den = (1 << (K + L)) - a**K
        if den <= 0:
            report.impossible.append(K)
            continue
        num = a**K - (1 << K)
        if num % den:
            continue
        x0 = num // den
        if x0 <= 2:
            report.excluded_trivial.append((K, x0))
            continue
        report.candidates.append(Candidate(K, L, x0, (x0 + 1) % (1 << K) == 0))
    return report
