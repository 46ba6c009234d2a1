import pytest
from hypothesis import given, strategies as st

from syrlab.errors import EvenParameter, NonPositiveSum
from syrlab.maps import (
    Caps,
    CapExceeded,
    EnteredCycle,
    divisibility_obstruction,
    iterate,
    new_map,
    parse_int,
    step,
    trajectory,
    trivial_cycles,
)


def brute_orbit(a, b, n, k):
    out = [n]
    for _ in range(k):
        n = n // 2 if n % 2 == 0 else (a * n + b) // 2
        out.append(n)
    return out


@st.composite
def valid_maps(draw, max_abs=10**4):
    a = draw(st.integers(0, max_abs)) * 2 + 1
    b = draw(st.integers(-max_abs, max_abs)) * 2 + 1
    if a + b <= 0:
        b = -b if -b + a > 0 else 1
    return a, b


class TestNewMap:
    def test_powers_of_two_recorded(self):
        m = new_map(3, 5)
        assert m.nu0 == 3
        assert m.nu1_delta == (2, 1)

    def test_prefers_delta_with_positive_product(self):
        # 3 = 4 - 1 = 2 + 1; with b = -1 only delta = -1 gives delta*b > 0
        assert new_map(3, -1).nu1_delta == (1, -1)
        assert new_map(3, 1).nu1_delta == (2, 1)

    @pytest.mark.parametrize("a,b", [(2, 1), (3, 2), (2, 2), (0, 1)])
    def test_even_rejected(self, a, b):
        with pytest.raises(EvenParameter):
            new_map(a, b)

    @pytest.mark.parametrize("a,b", [(1, -1), (3, -5), (-1, 3)])
    def test_sum_or_sign_rejected(self, a, b):
        with pytest.raises((NonPositiveSum, EvenParameter)):
            new_map(a, b)

    def test_no_power_structure_is_allowed(self):
        m = new_map(3, 3)
        assert m.nu0 is None
        tc = trivial_cycles(m)
        assert tc.no_power_structure and len(tc) == 0


class TestStep:
    def test_examples(self):
        m = new_map(3, 1)
        assert step(m, 7) == 11
        assert step(m, 26) == 13
        assert iterate(m, 1, 2) == 1
        assert step(new_map(5, 3), 3) == 9

    @given(valid_maps(), st.integers(1, 10**30), st.integers(0, 40))
    def test_matches_brute_force(self, ab, n, k):
        a, b = ab
        m = new_map(a, b)
        assert iterate(m, n, k) == brute_orbit(a, b, n, k)[-1]

    @given(valid_maps(), st.integers(1, 10**12))
    def test_stays_positive(self, ab, n):
        assert step(new_map(*ab), n) >= 1


class TestTrajectory:
    def test_classic(self):
        t = trajectory(new_map(3, 1), 7)
        assert t.steps == (7, 11, 17, 26, 13, 20, 10, 5, 8, 4, 2, 1, 2)
        assert t.terminal == EnteredCycle(10)
        assert t.cycle() == (2, 1)

    def test_three_minus_one_seventeen(self):
        t = trajectory(new_map(3, -1), 17)
        assert t.steps[-1] == 17 and t.terminal.at == 0
        assert len(t.cycle()) == 11

    def test_step_cap(self):
        t = trajectory(new_map(3, 1), 27, Caps(max_steps=5, max_value=2**64))
        assert t.terminal == CapExceeded("steps")
        assert t.cycle() == ()

    def test_value_cap(self):
        t = trajectory(new_map(3, 1), 27, Caps(max_steps=1000, max_value=100))
        assert t.terminal == CapExceeded("value")
        assert t.steps[-1] > 100 and max(t.steps[:-1]) <= 100

    @given(valid_maps(max_abs=50), st.integers(1, 2000))
    def test_repeat_is_first_repeat(self, ab, n):
        t = trajectory(new_map(*ab), n, Caps(2000, 2**80))
        if isinstance(t.terminal, EnteredCycle):
            body = t.steps[:-1]
            assert len(set(body)) == len(body)
            assert body[t.terminal.at] == t.steps[-1]
            assert brute_orbit(*ab, n, len(body))[1:] == list(t.steps[1:])


class TestTrivialCycles:
    @pytest.mark.parametrize("a,b,expected", [
        (3, 1, [(1, 2)]),
        (3, 5, [(1, 3), (5, 2)]),
        (7, 9, [(1, 4), (9, 3)]),
        (9, -7, [(1, 1), (7, 3)]),
        (5, 3, [(1, 3)]),
        (3, -1, [(1, 1)]),
    ])
    def test_known(self, a, b, expected):
        got = [(c.omega, c.length) for c in trivial_cycles(new_map(a, b))]
        assert sorted(got) == expected

    def test_elements_in_orbit_order(self):
        tc = trivial_cycles(new_map(7, 9))
        assert [c.elements for c in tc] == [(1, 8, 4, 2), (9, 36, 18)]

    @given(st.integers(1, 20), st.integers(-(2**15), 2**15))
    def test_every_cycle_closes(self, nu0, b):
        b = b | 1
        a = (1 << nu0) - b
        if a < 1:
            return
        m = new_map(a, b)
        for c in trivial_cycles(m):
            assert iterate(m, c.omega, c.length) == c.omega
            assert brute_orbit(a, b, c.omega, c.length - 1) == list(c.elements)


class TestDivisibility:
    @given(st.integers(1, 200), st.integers(1, 10**6))
    def test_multiples_of_b_stay_multiples(self, k, n):
        m = new_map(3, 5)
        v = 5 * n
        assert divisibility_obstruction(m, v)
        for _ in range(k):
            v = step(m, v)
            assert v % 5 == 0

    def test_b_one_never_obstructs(self):
        assert not divisibility_obstruction(new_map(3, 1), 9)
        assert not divisibility_obstruction(new_map(3, 5), 7)


class TestCaps:
    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("SYRLAB_MAX_STEPS", "123")
        monkeypatch.setenv("SYRLAB_MAX_VALUE", "2^40")
        assert Caps.from_env() == Caps(123, 2**40)
        assert Caps.from_env(max_steps=7) == Caps(7, 2**40)

    def test_defaults(self, monkeypatch):
        monkeypatch.delenv("SYRLAB_MAX_STEPS", raising=False)
        monkeypatch.delenv("SYRLAB_MAX_VALUE", raising=False)
        assert Caps.from_env() == Caps(10**6, 2**128)

    def test_parse_int(self):
        assert parse_int("5*2**60") == 5 * 2**60
        assert parse_int(" 2^128 ") == 2**128
        with pytest.raises(ValueError):
            parse_int("2**")
        with pytest.raises(ValueError):
            parse_int("__import__('os')")
