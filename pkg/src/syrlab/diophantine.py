"""Continued fraction of xi = log(a)/log(2) from integer comparisons only.

The expansion runs Euclid's algorithm on the pair (log a, log 2).  Every
remainder is an integer combination s*log(a) + t*log(2), so each quotient
decision is the sign of such a form, i.e. a comparison a**u versus 2**v.

Comparison strategy (``compare_pow``):

* ``exact``: materialize a**u and 2**v as Python ints.  Used when a**u has
  at most EXACT_BITS bits.
* ``staged``: square-and-multiply on truncated mantissas, carrying a lower
  and an upper bound with separate binary exponents.  Mantissa precision is
  doubled until the bracket excludes 2**v.  Cost is logarithmic in u, so
  q_20 ~ 6e9 for a = 3 is routine.  Since a is odd, a**u == 2**v only for
  u == v == 0 and the refinement always terminates.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction

from .errors import BudgetTooSmall, InconclusivePrecision, RelationViolation
from .intervals import Interval

EXACT_BITS = 1 << 16
MAX_MANTISSA_BITS = 1 << 20


def _check_base(a: int) -> None:
    if a < 3 or a % 2 == 0:
        raise ValueError(f"a must be an odd integer >= 3, got {a}")


def _trunc_down(m: int, e: int, prec: int) -> tuple[int, int]:
    excess = m.bit_length() - prec
    if excess > 0:
        return m >> excess, e + excess
    return m, e


def _trunc_up(m: int, e: int, prec: int) -> tuple[int, int]:
    excess = m.bit_length() - prec
    if excess > 0:
        return -((-m) >> excess), e + excess
    return m, e


def pow_bracket(a: int, u: int, prec: int) -> tuple[tuple[int, int], tuple[int, int]]:
    """Return ((lm, le), (hm, he)) with lm*2**le <= a**u <= hm*2**he.

    Mantissas are kept to ``prec`` bits, rounding down for the lower bound
    and up for the upper bound after every product.
    """
    if u == 0:
        return (1, 0), (1, 0)
    lm, le = _trunc_down(a, 0, prec)
    hm, he = _trunc_up(a, 0, prec)
    for bit in bin(u)[3:]:
        lm, le = _trunc_down(lm * lm, 2 * le, prec)
        hm, he = _trunc_up(hm * hm, 2 * he, prec)
        if bit == "1":
            lm, le = _trunc_down(lm * a, le, prec)
            hm, he = _trunc_up(hm * a, he, prec)
    return (lm, le), (hm, he)


def _below_pow2(m: int, e: int, v: int) -> bool:
    # m * 2**e < 2**v
    k = v - e
    return k >= 0 and m.bit_length() <= k


def _above_pow2(m: int, e: int, v: int) -> bool:
    # m * 2**e > 2**v
    k = v - e
    if k < 0:
        return True
    return m > (1 << k)


def compare_pow(a: int, u: int, v: int, strategy: str = "auto") -> int:
    """Sign of a**u - 2**v for integers u, v >= 0."""
    if u < 0 or v < 0:
        raise ValueError("exponents must be non-negative")
    if u == 0:
        return 0 if v == 0 else -1
    if strategy == "auto":
        strategy = "exact" if u * a.bit_length() <= EXACT_BITS else "staged"
    if strategy == "exact":
        x, y = a**u, 1 << v
        return (x > y) - (x < y)
    if strategy != "staged":
        raise ValueError(f"unknown strategy {strategy!r}")
    prec = 64 + u.bit_length()
    while prec <= MAX_MANTISSA_BITS:
        (lm, le), (hm, he) = pow_bracket(a, u, prec)
        if _below_pow2(hm, he, v):
            return -1
        if _above_pow2(lm, le, v):
            return 1
        prec *= 2
    raise InconclusivePrecision(f"cannot separate {a}**{u} from 2**{v}")


def form_sign(a: int, s: int, t: int, strategy: str = "auto") -> int:
    """Sign of s*log(a) + t*log(2)."""
    if s >= 0 and t >= 0:
        return 0 if s == t == 0 else 1
    if s <= 0 and t <= 0:
        return -1
    if s > 0:
        return compare_pow(a, s, -t, strategy)
    return -compare_pow(a, -s, t, strategy)


def sign_p_minus_q_xi(a: int, p: int, q: int, strategy: str = "auto") -> int:
    """Sign of p - q*xi, decided as 2**p versus a**q."""
    return form_sign(a, -q, p, strategy)


_cache: dict[int, tuple[list[int], tuple[int, int, int, int]]] = {}
_cache_lock = threading.Lock()


def _quotient(a: int, big: tuple[int, int], small: tuple[int, int], strategy: str) -> int:
    # largest c with big - c*small > 0 (never zero: xi is irrational)
    def positive(c):
        return form_sign(a, big[0] - c * small[0], big[1] - c * small[1], strategy) > 0

    hi = 1
    while positive(hi):
        hi *= 2
    lo = hi // 2  # positive(lo) holds, or lo == 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if positive(mid):
            lo = mid
        else:
            hi = mid
    return lo


def partial_quotients(a: int, count: int, strategy: str = "auto") -> list[int]:
    """First ``count`` partial quotients [a_0, a_1, ...] of log2(a).

    a_0 = floor(log2 a).  Results for the default strategy are memoized.
    """
    _check_base(a)
    if count < 1:
        raise ValueError("count must be >= 1")
    if strategy != "auto":
        return _expand(a, count, [], (1, 0, 0, 1), strategy)[0]
    with _cache_lock:
        known, state = _cache.get(a, ([], (1, 0, 0, 1)))
        if len(known) < count:
            known, state = _expand(a, count, list(known), state, strategy)
            _cache[a] = (known, state)
        return known[:count]


def _expand(a, count, known, state, strategy):
    bs, bt, ss, st = state
    while len(known) < count:
        c = _quotient(a, (bs, bt), (ss, st), strategy)
        if c < 1:
            raise RelationViolation(f"zero partial quotient for a={a}")
        known.append(c)
        bs, bt, ss, st = ss, st, bs - c * ss, bt - c * st
    return known, (bs, bt, ss, st)


@dataclass(frozen=True)
class Convergent:
    index: int
    partial_quotient: int
    p: int
    q: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.p, self.q)


def convergents(a: int, count: int, strategy: str = "auto") -> list[Convergent]:
    """Convergents p_n/q_n for n = 0 .. count-1."""
    quotients = partial_quotients(a, count, strategy)
    out = []
    p2, p1, q2, q1 = 0, 1, 1, 0
    for n, an in enumerate(quotients):
        p, q = an * p1 + p2, an * q1 + q2
        if math.gcd(p, q) != 1:
            raise RelationViolation(f"p_{n}, q_{n} not coprime")
        if n >= 2 and q <= q1:
            raise RelationViolation(f"q_{n} not increasing")
        out.append(Convergent(n, an, p, q))
        p2, p1, q2, q1 = p1, p, q1, q
    return out


@dataclass(frozen=True)
class XiEnclosure:
    a: int
    lower: Fraction
    upper: Fraction
    n: int  # the bracketing convergents are n and n+1

    @property
    def width(self) -> Fraction:
        return self.upper - self.lower

    def interval(self) -> Interval:
        return Interval(self.lower, self.upper)


def _certified_pair(a: int, cn: Convergent, cn1: Convergent) -> XiEnclosure:
    sn = sign_p_minus_q_xi(a, cn.p, cn.q)
    sn1 = sign_p_minus_q_xi(a, cn1.p, cn1.q)
    expected = -1 if cn.index % 2 == 0 else 1
    if sn != expected or sn1 != -expected:
        raise RelationViolation(f"convergents {cn.index}, {cn1.index} do not bracket log2({a})")
    lo, hi = sorted((cn.value, cn1.value))
    return XiEnclosure(a, lo, hi, cn.index)


def xi_enclosure(a: int, denominator_budget: int) -> XiEnclosure:
    """Tightest bracket of xi by consecutive convergents with q_{n+1} <= budget."""
    _check_base(a)
    count = 2
    while True:
        cs = convergents(a, count)
        if cs[1].q > denominator_budget:
            raise BudgetTooSmall(f"budget {denominator_budget} < q_1 = {cs[1].q}")
        if cs[-1].q > denominator_budget:
            return _certified_pair(a, cs[-3], cs[-2])
        count += 1


def xi_interval(a: int, bits: int) -> Interval:
    """Enclosure of xi with width < 2**-bits, from consecutive convergents."""
    _check_base(a)
    count = 2
    while True:
        cs = convergents(a, count)
        if cs[-2].q * cs[-1].q > (1 << bits):
            return _certified_pair(a, cs[-2], cs[-1]).interval()
        count += 4


def best_approx_gap(a: int, n: int) -> Fraction:
    """Certified lower bound 1/(q_n + q_{n+1}) < |p_n - q_n xi|.

    The sign pattern of p_n - q_n*xi (negative for even n) is checked by
    an integer power comparison before returning.
    """
    cs = convergents(a, n + 2)
    cn, cn1 = cs[n], cs[n + 1]
    expected = -1 if n % 2 == 0 else 1
    if sign_p_minus_q_xi(a, cn.p, cn.q) != expected:
        raise RelationViolation(f"sign of p_{n} - q_{n} xi is wrong for a={a}")
    return Fraction(1, cn.q + cn1.q)


def floor_xi_times(a: int, k: int) -> int:
    """floor(k * xi), decided on convergent enclosures refined until unambiguous."""
    if k == 0:
        return 0
    bits = 16 + 2 * k.bit_length()
    while True:
        iv = xi_interval(a, bits)
        lo, hi = math.floor(iv.lo * k), math.floor(iv.hi * k)
        if lo == hi:
            return lo
        bits *= 2
