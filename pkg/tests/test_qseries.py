from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qindex.qseries import (
    HalfExpSeries,
    cSeries,
    hatValuationBound,
    iDeltaHat,
    jSeries,
    minDegreeTet,
    pentagonSides,
    pochhammerSeries,
    psi0CoefficientSeries,
    tetIndexSeries,
    tetValuationBound,
    verifyPentagonSeries,
    verifySymmetries,
)

# Defining sum of I_Delta(m, e) expanded with sympy rational functions in
# q^(1/2) (independent of the package), keys in half-units, to O(q^10).
TET_ORACLE = {
    (0, 0): {0: 1, 2: -1, 4: -2, 6: -2, 8: -2, 12: 1, 14: 5, 16: 7, 18: 11},
    (1, 0): {2: -1, 4: -1, 8: 1, 10: 3, 12: 4, 14: 6, 16: 6, 18: 6},
    (0, 1): {0: 1, 4: -1, 6: -2, 8: -3, 10: -3, 12: -3, 14: -1, 16: 1, 18: 5},
    (1, 1): {3: -1, 5: -1, 7: -1, 11: 1, 13: 3, 15: 5, 17: 7, 19: 9},
    (-1, 2): {2: 1, 4: 1, 6: 1, 10: -1, 12: -3, 14: -5, 16: -7, 18: -9},
    (2, -1): {4: 1, 6: 1, 8: 1, 12: -1, 14: -3, 16: -5, 18: -7},
}


def brute_product(factors, order):
    """Expand prod (1 - c q^k) over given (c, k) in half-units, to ``order``."""
    poly = {0: 1}
    for c, k in factors:
        new = dict(poly)
        for e, v in poly.items():
            if e + k < order:
                new[e + k] = new.get(e + k, 0) - c * v
        poly = {e: v for e, v in new.items() if v}
    return poly


def series_div(a, b, order):
    """Long division a / b of coefficient dicts with b[0] = 1."""
    out = {}
    rem = dict(a)
    for k in range(order):
        v = rem.get(k, 0)
        if v:
            out[k] = v
            for kb, vb in b.items():
                if k + kb < order:
                    rem[k + kb] = rem.get(k + kb, 0) - v * vb
    return out


@pytest.mark.parametrize("me", sorted(TET_ORACLE))
def test_tet_index_matches_defining_sum_oracle(me):
    assert dict(tetIndexSeries(*me, 20).items()) == TET_ORACLE[me]


def test_pochhammer_examples():
    assert dict(pochhammerSeries(2, 1, 2, 2).items()) == {0: 1}
    assert dict(pochhammerSeries(2, 1, 2, 4).items()) == {0: 1, 2: -1}
    assert dict(pochhammerSeries(3, -1, 5, 1).items()) == {0: 1}
    qq = pochhammerSeries(2, 1, 2, 20)
    q2 = pochhammerSeries(4, 1, 4, 20)
    assert dict((qq * qq / q2).items()) == {0: 1, 2: -2, 8: 2, 18: -2}


def test_pochhammer_matches_brute_product():
    # (q;q)_inf to O(q^12) against the finite product
    oracle = brute_product([(1, 2 * k) for k in range(1, 13)], 24)
    assert dict(pochhammerSeries(2, 1, 2, 24).items()) == {k: v for k, v in sorted(oracle.items())}


def test_c_series_by_long_division():
    qq = brute_product([(1, 2 * k) for k in range(1, 11)], 20)
    q2 = brute_product([(1, 4 * k) for k in range(1, 6)], 20)
    sq = {}
    for a, va in qq.items():
        for b, vb in qq.items():
            if a + b < 20:
                sq[a + b] = sq.get(a + b, 0) + va * vb
    oracle = series_div(sq, q2, 20)
    assert dict(cSeries(20).items()) == {k: v for k, v in oracle.items() if v}
    assert dict(cSeries(1).items()) == {0: 1}
    with pytest.raises(ValueError):
        cSeries(0)


def test_j_series_examples():
    assert jSeries(-1, 20).valuation() >= 2
    assert jSeries(0, 10).coeff(0) == 1
    for n in (1, 2, 3):
        assert jSeries(n, 10).coeff(0) == 1


def test_i_hat_definition():
    for m, e in [(0, 0), (1, -2), (-2, 3), (2, 2)]:
        hat = iDeltaHat(m, e, 30)
        base = tetIndexSeries(m, e, 30).double().shift(2 * e)
        if e % 2:
            base = -base
        assert hat.agrees_with(base)
    assert iDeltaHat(0, 0, 30).agrees_with(tetIndexSeries(0, 0, 15).double())


@pytest.mark.parametrize("me", [(0, 0), (1, 0), (0, 1), (-1, 2), (2, -1), (1, 1)])
def test_psi0_coefficients_equal_i_hat(me):
    assert psi0CoefficientSeries(*me, 30).agrees_with(iDeltaHat(*me, 30))


def test_min_degree_against_scan():
    for m in range(-6, 7):
        for e in range(-6, 7):
            n0 = max(0, -e)
            scan = min(Fraction(n * (n + 1) - (2 * n + e) * m, 2) for n in range(n0, n0 + 4 * abs(m) + 10))
            assert minDegreeTet(m, e) == scan
    assert minDegreeTet(0, 0) == 0


def test_valuation_bounds_are_lower_bounds():
    for m in range(-6, 7):
        for e in range(-6, 7):
            order = 2 * int(tetValuationBound(m, e)) + 12
            s = tetIndexSeries(m, e, order)
            assert s.valuation() >= 2 * minDegreeTet(m, e)
            assert s.valuation() >= 2 * tetValuationBound(m, e)
            h = iDeltaHat(m, e, 2 * int(hatValuationBound(m, e)) + 12)
            assert h.valuation() >= 2 * hatValuationBound(m, e)


def test_pentagon_smallest_and_bound_one():
    lhs, rhs = pentagonSides(0, 0, 0, 0, 6)
    assert lhs.agrees_with(rhs)
    assert verifyPentagonSeries(10, 1).passed


def test_symmetries_zero_and_bound():
    assert verifySymmetries(10, 0).passed
    assert verifySymmetries(12, 3).passed


def test_json_roundtrip_and_pretty():
    s = tetIndexSeries(1, 1, 12)
    assert HalfExpSeries.from_json_obj(s.to_json_obj()) == s
    assert tetIndexSeries(0, 0, 12).pretty().startswith("1 - q - 2*q^2")
    assert tetIndexSeries(0, 0, 1).pretty() == "1 + O(q^1/2)"


series_st = st.builds(
    lambda d, t: HalfExpSeries(d, t),
    st.dictionaries(st.integers(-6, 20), st.integers(-5, 5), max_size=8),
    st.integers(10, 24),
)


@given(series_st, series_st)
def test_mul_commutes_and_respects_truncation(a, b):
    p = a * b
    assert p == b * a
    assert p.trunc <= min(a.trunc, b.trunc)
    assert all(k < p.trunc for k in p.coeffs)
    assert 0 not in p.coeffs.values()


@given(series_st, series_st)
def test_doubling_is_ring_homomorphism(a, b):
    assert (a * b).double().agrees_with(a.double() * b.double())
    assert (a + b).double() == a.double() + b.double()


@given(st.dictionaries(st.integers(1, 15), st.integers(-4, 4), max_size=6), st.sampled_from([1, -1]))
def test_inverse(d, c0):
    d = dict(d)
    d[0] = c0
    s = HalfExpSeries(d, 16)
    assert (s * s.inverse()).agrees_with(HalfExpSeries.one(16))


@settings(max_examples=30, deadline=None)
@given(st.integers(-5, 5), st.integers(-5, 5))
def test_z3_orbit_and_z2_symmetry(m, e):
    order = 40
    base = tetIndexSeries(m, e, order)
    # I(m,e) = (-q^(1/2))^m I(-e-m, m) = (-q^(1/2))^(-e) I(e, -e-m)
    t1 = tetIndexSeries(-e - m, m, order + abs(m)).shift(m)
    t1 = -t1 if m % 2 else t1
    t2 = tetIndexSeries(e, -e - m, order + abs(e)).shift(-e)
    t2 = -t2 if e % 2 else t2
    assert base.agrees_with(t1)
    assert base.agrees_with(t2)
    # I^(m,e) = (-q)^(e+m) I^(-e,-m)
    h = iDeltaHat(m, e, order)
    k = e + m
    h2 = iDeltaHat(-e, -m, order + 2 * abs(k)).shift(2 * k)
    h2 = -h2 if k % 2 else h2
    assert h.agrees_with(h2)
