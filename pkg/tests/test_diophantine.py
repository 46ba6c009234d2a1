"""Continued fractions of log2(a), checked against mpmath at high precision."""

from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from syrlab.diophantine import (
    best_approx_gap,
    compare_pow,
    convergents,
    floor_xi_times,
    form_sign,
    partial_quotients,
    pow_bracket,
    sign_p_minus_q_xi,
    xi_enclosure,
    xi_interval,
)
from syrlab.errors import BudgetTooSmall

LOG2_3 = [1, 1, 1, 2, 2, 3, 1, 5, 2, 23, 2, 2, 1, 1, 55, 1, 4, 3, 1, 1, 15, 1, 9, 2, 5, 7]


def mp_quotients(a, count, dps=200):
    with mpmath.workdps(dps):
        x = mpmath.log(a) / mpmath.log(2)
        out = []
        for _ in range(count):
            q = int(mpmath.floor(x))
            out.append(q)
            x = 1 / (x - q)
        return out


def mp_sign(a, p, q):
    with mpmath.workdps(120):
        d = p - q * mpmath.log(a) / mpmath.log(2)
        return 1 if d > 0 else -1


odd_bases = st.integers(1, 200).map(lambda k: 2 * k + 1)


class TestComparePow:
    @given(odd_bases, st.integers(0, 400), st.integers(0, 1200))
    def test_matches_exact(self, a, u, v):
        exact = (a**u > 2**v) - (a**u < 2**v)
        assert compare_pow(a, u, v) == exact
        if u:
            assert compare_pow(a, u, v, "staged") == exact

    def test_huge_exponent_staged(self):
        # q20 for a = 3: 3^6189245291 vs 2^9809721694 (p20)
        c = convergents(3, 21)[20]
        assert compare_pow(3, c.q, c.p) == -mp_sign(3, c.p, c.q)

    @given(odd_bases, st.integers(1, 300), st.integers(8, 80))
    def test_bracket_encloses(self, a, u, prec):
        (lm, le), (hm, he) = pow_bracket(a, u, prec)
        assert Fraction(lm) * Fraction(2) ** le <= a**u <= Fraction(hm) * Fraction(2) ** he

    def test_zero_exponent(self):
        assert compare_pow(3, 0, 0) == 0
        assert compare_pow(3, 0, 1) == -1

    def test_form_sign(self):
        assert form_sign(3, 1, -1) == 1  # log 3 > log 2
        assert form_sign(3, -2, 3) == -1  # 8 < 9
        assert form_sign(3, 0, 0) == 0
        assert sign_p_minus_q_xi(3, 2, 1) == 1


class TestPartialQuotients:
    def test_log2_3(self):
        assert partial_quotients(3, 26) == LOG2_3

    @pytest.mark.parametrize("a", [3, 5, 7, 9, 11, 15, 17, 31, 33, 1023])
    def test_against_mpmath(self, a):
        assert partial_quotients(a, 25) == mp_quotients(a, 25)

    @pytest.mark.parametrize("a", [3, 5, 7, 9])
    def test_strategies_agree(self, a):
        # exact powers get large quickly: q_12 for a = 7 is already ~4e6
        assert partial_quotients(a, 10, "exact") == partial_quotients(a, 10, "staged")

    def test_prefix_consistent_with_cache(self):
        long = partial_quotients(5, 30)
        assert partial_quotients(5, 10) == long[:10]

    @pytest.mark.parametrize("bad", [1, 2, 4, -3])
    def test_rejects_bad_base(self, bad):
        with pytest.raises(ValueError):
            partial_quotients(bad, 3)


class TestConvergents:
    def test_known_denominators(self):
        cs = convergents(3, 22)
        assert cs[19].q == 397573379
        assert cs[20].q == 6189245291
        assert cs[21].q == 6586818670

    @pytest.mark.parametrize("a", [3, 5, 7, 17])
    def test_alternating_signs(self, a):
        for c in convergents(a, 22):
            expected = -1 if c.index % 2 == 0 else 1
            assert sign_p_minus_q_xi(a, c.p, c.q) == expected == mp_sign(a, c.p, c.q)

    def test_determinant(self):
        cs = convergents(7, 20)
        for prev, cur in zip(cs, cs[1:]):
            assert cur.p * prev.q - prev.p * cur.q == (-1) ** (cur.index + 1)


class TestEnclosure:
    @pytest.mark.parametrize("budget,lo,hi", [(1, 1, 2), (2, Fraction(3, 2), 2), (12, Fraction(19, 12), Fraction(8, 5))])
    def test_examples(self, budget, lo, hi):
        e = xi_enclosure(3, budget)
        assert (e.lower, e.upper) == (lo, hi)

    @given(odd_bases, st.integers(2, 10**9))
    def test_contains_xi_and_respects_budget(self, a, budget):
        try:
            e = xi_enclosure(a, budget)
        except BudgetTooSmall:
            assert convergents(a, 2)[1].q > budget
            return
        assert max(e.lower.denominator, e.upper.denominator) <= budget
        with mpmath.workdps(60):
            xi = mpmath.log(a) / mpmath.log(2)
            assert mpmath.mpf(e.lower.numerator) / e.lower.denominator < xi
            assert xi < mpmath.mpf(e.upper.numerator) / e.upper.denominator

    def test_budget_too_small(self):
        # log2(5) = [2; 3, ...]: q1 = 3
        with pytest.raises(BudgetTooSmall):
            xi_enclosure(5, 2)

    def test_interval_width(self):
        iv = xi_interval(3, 100)
        assert iv.width < Fraction(1, 2**100)


class TestGapAndFloor:
    def test_best_approx_gap(self):
        assert best_approx_gap(3, 0) == Fraction(1, 2)
        cs = convergents(3, 21)
        assert best_approx_gap(3, 19) == Fraction(1, cs[19].q + cs[20].q)

    @given(odd_bases, st.integers(0, 10**6))
    def test_floor_xi_times(self, a, k):
        with mpmath.workdps(80):
            assert floor_xi_times(a, k) == int(mpmath.floor(k * mpmath.log(a) / mpmath.log(2)))

    def test_floor_small(self):
        assert floor_xi_times(3, 2) == 3
        assert floor_xi_times(3, 1) == 1
