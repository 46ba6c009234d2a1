from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from syrlab.census import census, verify_cycle
from syrlab.errors import BadNu
from syrlab.families import (
    ExpansionUnresolved,
    FamilyKind,
    a_nu,
    conjecture_tables,
    expansion_factor,
    expansion_witness,
    family_map,
    family_trivial_schema,
    omega_b_cycle_exists,
    verify_family,
)
from syrlab.maps import Caps, iterate, new_map, trivial_cycles


@pytest.mark.parametrize("kind,nu,ab", [
    (FamilyKind.PlusPlus, 1, (3, 1)),
    (FamilyKind.PlusPlus, 2, (5, 3)),
    (FamilyKind.MinusPlus, 2, (3, 5)),
    (FamilyKind.PlusMinus, 1, (3, -1)),
    (FamilyKind.PlusMinus, 2, (5, -3)),
    (FamilyKind.MinusOne, 3, (7, 1)),
])
def test_family_map(kind, nu, ab):
    m = family_map(kind, nu)
    assert (m.a, m.b) == ab


def test_bad_nu():
    with pytest.raises(BadNu):
        family_map(FamilyKind.MinusOne, 1)
    with pytest.raises(BadNu):
        family_map(FamilyKind.PlusPlus, 0)


@pytest.mark.parametrize("kind", list(FamilyKind))
@pytest.mark.parametrize("nu", range(1, 9))
def test_trivial_cycles_match_schema(kind, nu):
    if kind is FamilyKind.MinusOne and nu < 2:
        return
    m = family_map(kind, nu)
    got = sorted((c.omega, c.length) for c in trivial_cycles(m))
    assert got == family_trivial_schema(kind, nu)
    for c in trivial_cycles(m):
        assert iterate(m, c.omega, c.length) == c.omega


def test_schema_examples():
    assert family_trivial_schema(FamilyKind.PlusMinus, 2) == [(1, 1), (3, 2)]
    tc = trivial_cycles(family_map(FamilyKind.MinusOne, 3))
    assert [c.elements for c in tc] == [(1, 4, 2)]


class TestANu:
    def test_small(self):
        assert (a_nu(1).is_integer, a_nu(1).A) == (True, 1)
        assert (a_nu(2).is_integer, a_nu(2).A) == (True, 3)
        assert not a_nu(3).is_integer and a_nu(3).value_numerator // a_nu(3).denominator == 104

    @pytest.mark.parametrize("nu", range(3, 65))
    def test_bracket_and_floor(self, nu):
        info = a_nu(nu)
        assert not info.is_integer
        assert info.bracket_holds
        assert info.floor == nu * (nu - 1)


class TestOmegaB:
    def test_nu_2(self):
        r = omega_b_cycle_exists(2)
        assert r.exists and r.cycle.elements == (3, 9, 24, 12, 6)

    def test_nu_1_is_trivial(self):
        assert omega_b_cycle_exists(1).cycle.elements == (1, 2)

    @pytest.mark.parametrize("nu", range(3, 12))
    def test_absent_and_census_agrees(self, nu):
        assert not omega_b_cycle_exists(nu).exists
        m = family_map(FamilyKind.PlusPlus, nu)
        # b's orbit never returns to b within a long window
        v = m.b
        for _ in range(5000):
            v = (m.a * v + m.b) // 2 if v % 2 else v // 2
            assert v != m.b


class TestExpansion:
    def test_examples(self):
        w = expansion_witness(1, 5)
        assert (w.n, w.peak) == (31, 161) and w.ratio > Fraction(3, 2) ** 4
        assert expansion_witness(2, 3).peak == 49

    @given(st.integers(1, 8), st.integers(2, 64))
    def test_identities(self, nu, k):
        w = expansion_witness(nu, k)
        assert w.identities_hold and w.ratio_bound_holds

    def test_factor(self):
        assert expansion_factor(new_map(3, 1), 27) == Fraction(4616, 27)
        assert expansion_factor(new_map(3, 1), 1) == 2
        assert expansion_factor(new_map(5, 3), 3) == 8

    def test_factor_unresolved(self):
        r = expansion_factor(new_map(5, 3), 7, Caps(50, 2**200))
        assert isinstance(r, ExpansionUnresolved) and r.reason == "StepCap" and r.running_max > 7


class TestTables:
    def test_all_entries_are_cycles(self):
        for t in conjecture_tables():
            for omega, length, els in t.cycles:
                assert verify_cycle(t.map, els) and min(els) == omega and len(els) == length

    def test_expected_contents(self):
        by_map = {(t.a, t.b): t for t in conjecture_tables() if not t.schema}
        assert sorted(by_map[(5, 3)].omegas) == [1, 3, 39, 43, 51, 53, 61]
        assert [c[1] for c in by_map[(5, 3)].cycles] == [3, 5, 7, 7, 7, 7, 7]
        assert [(c[0], c[1]) for c in by_map[(3, -1)].cycles] == [(1, 1), (5, 3), (17, 11)]
        assert sorted(by_map[(3, 5)].omegas) == [1, 5, 19, 23, 187, 347]
        assert {(7, 9), (9, -7)} <= set(by_map)

    @pytest.mark.parametrize("t", [t for t in conjecture_tables() if not t.schema], ids=lambda t: t.label)
    def test_census_rediscovers(self, t):
        top = max(max(els) for _, _, els in t.cycles)
        rep = census(t.map, top, Caps(10**4, 2**160))
        assert set(t.omegas) <= set(rep.omegas)


@pytest.mark.parametrize("kind,nu", [(FamilyKind.PlusPlus, 2), (FamilyKind.MinusPlus, 3),
                                     (FamilyKind.PlusMinus, 1), (FamilyKind.MinusOne, 3)])
def test_verify_family(kind, nu):
    r = verify_family(kind, nu, N=1000)
    assert r["passed"], r["checks"]


def test_minus_plus_finds_both_trivial_cycles():
    for nu in (1, 3, 4, 5):
        m = family_map(FamilyKind.MinusPlus, nu)
        found = {(c.omega, c.length) for c in census(m, 2000, Caps(10**4, 2**128)).cycles}
        assert (1, nu + 1) in found and (m.b, nu) in found


def test_verify_family_small_N_only_checks_reachable_cycles():
    r = verify_family(FamilyKind.MinusPlus, 2, N=100)
    assert r["checks"]["census_exactly_table"] and r["passed"]
    assert [o for o, _ in r["census"]["cycles"]] == [1, 5, 19, 23]
