import json
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from syrlab.bounds import (
    BoundCertificate,
    c0,
    c0_interval,
    c1_interval,
    check_certificate,
    defect_check,
    floor_ratio_pow,
    length_bound_holds,
    min_length_bound,
    mu_length_bound,
    oscillation_bound,
)
from syrlab.census import canonicalize, census
from syrlab.diophantine import convergents
from syrlab.errors import MuTooSmall, NonPositiveB
from syrlab.maps import Caps, new_map

N0 = 5 * 2**60


def mp_c0(a, b):
    with mpmath.workdps(50):
        return a * mpmath.log(2) / b


def test_c0_three_one():
    iv = c0(new_map(3, 1))
    assert iv.contains(Fraction("2.07944"))
    assert iv.width <= Fraction(1, 10**5)


@pytest.mark.parametrize("a,b", [(3, 1), (3, 5), (5, 3), (7, 9), (17, 15)])
def test_constants_enclose_mpmath(a, b):
    m = new_map(a, b)
    with mpmath.workdps(50):
        for iv, val in ((c0_interval(m), mp_c0(a, b)), (c1_interval(m), (a - 2) * mpmath.log(2) / b)):
            assert mpmath.mpf(iv.lo.numerator) / iv.lo.denominator <= val
            assert val <= mpmath.mpf(iv.hi.numerator) / iv.hi.denominator


def test_rejects_negative_b():
    with pytest.raises(NonPositiveB):
        min_length_bound(new_map(3, -1), 100, 5)


class TestMinLengthBound:
    def test_three_one_table(self):
        cert = min_length_bound(new_map(3, 1), N0, 25)
        cs = convergents(3, 27)
        rows = {r["n"]: r for r in cert.table}
        c = mp_c0(3, 1)
        for n in range(1, 26):
            qn, qn1 = cs[n].q, cs[n + 1].q
            with mpmath.workdps(60):
                term = int(mpmath.floor(c * N0 / (qn + qn1)))
            assert rows[n]["term_floor"] == term
            assert rows[n]["bound"] == min(qn, term)
        assert cert.bound == max(r["bound"] for r in cert.table)
        assert rows[19]["bound"] == 397573379
        assert cert.bound >= 363_974_000

    def test_best_row_is_witness(self):
        cert = min_length_bound(new_map(3, 1), N0, 25)
        row = next(r for r in cert.table if r["n"] == cert.n)
        assert (cert.q_n, cert.q_n1, cert.bound) == (row["q_n"], row["q_n1"], row["bound"])

    @settings(max_examples=25)
    @given(st.integers(1, 2**70), st.integers(1, 20))
    def test_monotone_in_N0(self, n0, n_max):
        m = new_map(3, 1)
        assert min_length_bound(m, n0, n_max).bound <= min_length_bound(m, n0 * 2, n_max).bound

    def test_certificate_round_trip(self):
        cert = min_length_bound(new_map(3, 5), 10**12, 15)
        again = BoundCertificate.from_dict(json.loads(cert.to_json()))
        assert again == cert
        assert check_certificate(again) == []

    def test_tampered_certificate_detected(self):
        cert = min_length_bound(new_map(3, 1), N0, 25)
        d = cert.to_dict()
        d["bound"] += 1
        assert check_certificate(BoundCertificate.from_dict(d))
        d = cert.to_dict()
        d["c_lower"] = "3/1"
        assert check_certificate(BoundCertificate.from_dict(d))


class TestMuBound:
    @given(st.fractions(min_value=0, max_value=10**20, max_denominator=1000),
           st.integers(1, 10**6), st.sampled_from([Fraction(2), Fraction(5, 2), Fraction(29, 2), Fraction(7, 3)]))
    def test_floor_ratio_pow(self, num, q, mu):
        t = floor_ratio_pow(num, q, mu)
        r, s = mu.numerator, mu.denominator
        assert t**s * q**r <= num**s < (t + 1) ** s * q**r

    def test_mu_bound(self):
        cert = mu_length_bound(new_map(3, 1), N0, 14, 25)
        assert cert.mode == "IrrationalityMeasure"
        assert cert.bound == max(r["bound"] for r in cert.table)
        assert check_certificate(cert) == []
        assert cert.assumptions

    def test_mu_too_small(self):
        with pytest.raises(MuTooSmall):
            mu_length_bound(new_map(3, 1), N0, 1, 10)

    def test_oscillation_bound(self):
        cert = oscillation_bound(new_map(5, 3), 10**6, 10)
        assert cert.constant == "c1" and cert.target == "OscillationCountM"
        assert check_certificate(cert) == []


# cycles with b >= 1 found by census
def _cycles():
    out = []
    for a, b, N, caps in ((3, 5, 5000, Caps()), (5, 3, 2000, Caps(10**4, 2**200)), (3, 1, 100, Caps()), (3, 13, 3000, Caps())):
        m = new_map(a, b)
        out += [(m, c) for c in census(m, N, caps).cycles]
    return out


@pytest.mark.parametrize("m,cycle", _cycles(), ids=lambda x: str(getattr(x, "omega", x)))
def test_defect_and_length_bound_on_real_cycles(m, cycle):
    dc = defect_check(m, cycle)
    assert dc.holds
    # cross-check the defect value against mpmath
    with mpmath.workdps(60):
        d = (cycle.K + cycle.L) - cycle.K * mpmath.log(m.a) / mpmath.log(2)
        assert mpmath.mpf(dc.defect.lo.numerator) / dc.defect.lo.denominator <= d
        assert d <= mpmath.mpf(dc.defect.hi.numerator) / dc.defect.hi.denominator
    assert all(length_bound_holds(m, cycle, 12).values())


def test_defect_check_rejects_false_cycle_shape():
    # (5, 10) for (3,5): K=1, L=1; 2 - log2(3) ~ 0.415 < 5/(3 ln2 5) ~ 0.48
    dc = defect_check(new_map(3, 5), canonicalize([5, 10]))
    assert dc.holds
    # same shape pretending min(odd) is huge: tight form must fail
    fake = canonicalize([5001, 10002])
    assert not defect_check(new_map(3, 5), fake).tight_holds
