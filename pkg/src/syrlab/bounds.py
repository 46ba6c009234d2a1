"""Defect inequality and lower bounds on cycle length / oscillation count.

For a cycle with K odd and L even elements,

    0 < (K+L) - K*xi <= b*K / (a*ln2*min(odd elements)),

and combining this with best-approximation properties of the convergents
p_n/q_n of xi = log2(a) gives, for every n,

    K >= min(q_n, c0*min / (q_n + q_{n+1})),     c0 = a*ln2/b.

All comparisons are decided on rational enclosures of xi and ln 2.
Certificates can be re-checked by :func:`check_certificate`, which uses an
independent ln 2 series and recomputes the whole inequality chain.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional, Union

from .census import Cycle
from .diophantine import compare_pow, convergents, xi_interval
from .errors import DegenerateA, MuTooSmall, NonPositiveB
from .intervals import Interval, decide, grid_outward, ln2_interval
from .maps import MapParams

DEFAULT_C0_WIDTH = Fraction(1, 10**5)
CONSTANT_BITS = 128


def _require_b(m: MapParams) -> None:
    if m.b < 1:
        raise NonPositiveB(f"bounds assume b >= 1, got b={m.b}")


def c0_interval(m: MapParams, bits: int = CONSTANT_BITS) -> Interval:
    _require_b(m)
    return ln2_interval(bits) * Fraction(m.a, m.b)


def c1_interval(m: MapParams, bits: int = CONSTANT_BITS) -> Interval:
    _require_b(m)
    if m.a < 3:
        raise DegenerateA(f"c1 = (a-2) ln2 / b needs a >= 3, got a={m.a}")
    return ln2_interval(bits) * Fraction(m.a - 2, m.b)


def c0(m: MapParams, width: Fraction = DEFAULT_C0_WIDTH) -> Interval:
    """Enclosure of a*ln2/b of width <= ``width``, on the grid of step width/2."""
    width = Fraction(width)
    bits = max(CONSTANT_BITS, 8 - math.floor(math.log2(width)) + m.a.bit_length())
    return grid_outward(c0_interval(m, bits), width)


def c1(m: MapParams, width: Fraction = DEFAULT_C0_WIDTH) -> Interval:
    width = Fraction(width)
    bits = max(CONSTANT_BITS, 8 - math.floor(math.log2(width)) + m.a.bit_length())
    return grid_outward(c1_interval(m, bits), width)


# ---------------------------------------------------------------- defect

@dataclass(frozen=True)
class DefectCheck:
    omega: int
    K: int
    L: int
    defect: Interval
    rhs_tight: Interval
    rhs_coarse: Interval
    positive: bool
    tight_holds: bool
    coarse_holds: bool

    @property
    def holds(self) -> bool:
        return self.positive and self.tight_holds and self.coarse_holds


def defect_interval(a: int, K: int, L: int, bits: int) -> Interval:
    return (K + L) - xi_interval(a, bits) * K


def _strictly_below(lhs_fn, rhs_fn, what: str) -> bool:
    def check(bits):
        lhs, rhs = lhs_fn(bits), rhs_fn(bits)
        if lhs.certainly_lt(rhs):
            return True
        if lhs.lo >= rhs.hi:
            return False
        return None

    return decide(check, what)


def defect_check(m: MapParams, cycle: Cycle) -> DefectCheck:
    """Certify 0 < (K+L) - K*xi <= b*K/(a ln2 min_odd) and the coarse form."""
    _require_b(m)
    K, L = cycle.K, cycle.L
    if K == 0:
        raise ValueError("cycle has no odd element")
    positive = compare_pow(m.a, K, K + L) < 0  # a^K < 2^(K+L)

    def tight(bits):
        return ln2_interval(bits).reciprocal() * Fraction(m.b * K, m.a * cycle.min_odd)

    def coarse(bits):
        return ln2_interval(bits).reciprocal() * Fraction(m.b * cycle.length, m.a * cycle.omega)

    def defect(bits):
        return defect_interval(m.a, K, L, bits)

    tight_ok = _strictly_below(defect, tight, "defect vs tight bound")
    coarse_ok = _strictly_below(defect, coarse, "defect vs coarse bound")
    bits = 64
    return DefectCheck(cycle.omega, K, L, defect(bits), tight(bits), coarse(bits),
                       positive, tight_ok, coarse_ok)


def length_bound_holds(m: MapParams, cycle: Cycle, n_max: int = 12) -> dict[int, bool]:
    """For each n <= n_max, certify #cycle >= min(q_n, c0*min / (q_n + q_{n+1})).

    Both the K / min(odd) and the length / min forms are checked; the value
    for n is True only if both hold.
    """
    _require_b(m)
    cs = convergents(m.a, n_max + 2)
    out = {}
    for n in range(n_max + 1):
        qn, qn1 = cs[n].q, cs[n + 1].q
        ok = True
        for count, floor_value in ((cycle.K, cycle.min_odd), (cycle.length, cycle.omega)):
            if count >= qn:
                continue

            def check(bits, count=count, floor_value=floor_value):
                term = c0_interval(m, bits) * Fraction(floor_value, qn + qn1)
                if term.hi <= count:
                    return True
                if term.lo > count:
                    return False
                return None

            ok = ok and decide(check, "length bound")
        out[n] = ok
    return out


# ---------------------------------------------------------------- certificates

def _frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _unfrac(s: str) -> Fraction:
    return Fraction(s)


@dataclass
class BoundCertificate:
    a: int
    b: int
    N0: int
    floor_of: str  # "min_omega" or "min_odd"
    mode: str  # "ConvergentPair" or "IrrationalityMeasure"
    target: str  # "CycleLengthK" or "OscillationCountM"
    constant: str  # "c0" or "c1"
    c_lower: Fraction
    c_upper: Fraction
    n: int
    q_n: int
    q_n1: int
    bound: int
    mu: Optional[Fraction] = None
    n0_assumed: Optional[int] = None
    table: list = field(default_factory=list)
    assumptions: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["c_lower"] = _frac(self.c_lower)
        d["c_upper"] = _frac(self.c_upper)
        d["mu"] = None if self.mu is None else _frac(Fraction(self.mu))
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "BoundCertificate":
        d = dict(d)
        d["c_lower"] = _unfrac(d["c_lower"])
        d["c_upper"] = _unfrac(d["c_upper"])
        if d.get("mu") is not None:
            d["mu"] = _unfrac(d["mu"])
        return cls(**d)


def _as_mu(mu) -> Fraction:
    if isinstance(mu, float):
        mu = Fraction(str(mu))
    mu = Fraction(mu)
    if mu < 2:
        raise MuTooSmall(f"mu must be >= 2, got {mu}")
    return mu


def floor_ratio_pow(num: Fraction, q: int, mu: Fraction) -> int:
    """floor(num / q**mu) for rational num >= 0 and rational mu > 0."""
    r, s = mu.numerator, mu.denominator
    if s == 1:
        return math.floor(num / q**r)
    # largest t with t**s * q**r <= num**s
    target = num**s
    qr = q**r
    lo, hi = 0, 1
    while hi**s * qr <= target:
        hi *= 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if mid**s * qr <= target:
            lo = mid
        else:
            hi = mid
    return lo


def _evaluate(m, N0, n_max, c_iv, constant, target, floor_of, mu=None, n0=1):
    if N0 < 1:
        raise ValueError("N0 must be >= 1")
    if n_max < n0:
        raise ValueError("n_max must be >= the first admissible index")
    cs = convergents(m.a, n_max + 2)
    table = []
    best = None
    for n in range(n0, n_max + 1):
        qn, qn1 = cs[n].q, cs[n + 1].q
        if mu is None:
            term = math.floor(c_iv.lo * N0 / (qn + qn1))
        else:
            term = floor_ratio_pow(c_iv.lo * N0, qn, mu)
        value = min(qn, term)
        table.append({"n": n, "q_n": qn, "q_n1": qn1, "term_floor": term, "bound": value})
        if best is None or value > best["bound"]:
            best = table[-1]
    assumptions = [f"every nontrivial cycle has {floor_of.replace('_', '(')}) >= N0"]
    if mu is not None:
        assumptions.append(
            f"|p - q*xi| > q**-mu holds for every convergent with n >= {n0} "
            "(irrationality-measure threshold taken as given, not computed)"
        )
    return BoundCertificate(
        a=m.a, b=m.b, N0=N0, floor_of=floor_of,
        mode="ConvergentPair" if mu is None else "IrrationalityMeasure",
        target=target, constant=constant, c_lower=c_iv.lo, c_upper=c_iv.hi,
        n=best["n"], q_n=best["q_n"], q_n1=best["q_n1"], bound=best["bound"],
        mu=mu, n0_assumed=n0 if mu is not None else None,
        table=table, assumptions=assumptions,
    )


def min_length_bound(m: MapParams, N0: int, n_max: int, floor_of: str = "min_omega") -> BoundCertificate:
    """Best bound max_{1<=n<=n_max} min(q_n, floor(c0*N0/(q_n+q_{n+1})))."""
    _require_b(m)
    return _evaluate(m, N0, n_max, c0_interval(m), "c0", "CycleLengthK", floor_of)


def default_mu(a: int) -> Fraction:
    if a == 3:
        return Fraction(14)
    raise ValueError(f"no default irrationality measure for a={a}; pass mu explicitly")


def mu_length_bound(m: MapParams, N0: int, mu: Union[int, Fraction, str, None], n_max: int,
                    n0: int = 1, floor_of: str = "min_omega") -> BoundCertificate:
    """Bound max_{n0<=n<=n_max} min(q_n, floor(c0*N0/q_n**mu)), mu supplied by the caller."""
    _require_b(m)
    mu = default_mu(m.a) if mu is None else _as_mu(mu)
    return _evaluate(m, N0, n_max, c0_interval(m), "c0", "CycleLengthK", floor_of, mu, n0)


def oscillation_bound(m: MapParams, N0: int, n_max: int, mu=None, n0: int = 1) -> BoundCertificate:
    """Lower bound on the number m of oscillations, constant c1 = (a-2) ln2 / b."""
    _require_b(m)
    c = c1_interval(m)
    if mu is not None:
        mu = _as_mu(mu)
    return _evaluate(m, N0, n_max, c, "c1", "OscillationCountM", "min_omega", mu, n0)


# ---------------------------------------------------------------- re-checking

def _ln2_alt(bits: int) -> tuple[Fraction, Fraction]:
    # ln 2 = sum_{k>=1} 1/(k 2^k); tail after k terms < 1/((k+1) 2^k)
    scale = bits + 16
    one = 1 << scale
    lo = hi = 0
    k = 1
    while True:
        den = k << k
        lo += one // den
        hi += -(-one // den)
        tail = -(-one // ((k + 1) << k))
        if tail <= 1:
            return Fraction(lo, one), Fraction(hi + tail, one)
        k += 1


def check_certificate(cert: BoundCertificate) -> list[str]:
    """Independently recompute a certificate; returns a list of problems (empty = accepted)."""
    problems = []
    factor = Fraction(cert.a if cert.constant == "c0" else cert.a - 2, cert.b)
    contained = False
    for bits in (256, 512, 1024):
        lo2, hi2 = _ln2_alt(bits)
        if cert.c_lower <= lo2 * factor and hi2 * factor <= cert.c_upper:
            contained = True
            break
    if not contained:
        problems.append("constant enclosure does not contain the recomputed value")
    if cert.c_lower > cert.c_upper:
        problems.append("empty constant enclosure")
    if cert.q_n <= 0 or cert.q_n1 <= cert.q_n and cert.n >= 1:
        problems.append("convergent denominators not increasing")
    if cert.mode == "ConvergentPair":
        term = math.floor(cert.c_lower * cert.N0 / (cert.q_n + cert.q_n1))
    else:
        term = floor_ratio_pow(cert.c_lower * cert.N0, cert.q_n, Fraction(cert.mu))
    if min(cert.q_n, term) != cert.bound:
        problems.append(f"bound {cert.bound} != min(q_n, floor term) = {min(cert.q_n, term)}")
    # denominators must be consecutive convergents of log2(a)
    cs = convergents(cert.a, cert.n + 2)
    if (cs[cert.n].q, cs[cert.n + 1].q) != (cert.q_n, cert.q_n1):
        problems.append("q_n, q_{n+1} are not consecutive convergent denominators")
    for row in cert.table:
        if row["bound"] > cert.bound:
            problems.append(f"table row n={row['n']} beats the reported bound")
    return problems
