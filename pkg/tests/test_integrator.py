import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qindex.errors import MalformedInput, NoConvergence, PinchDetected, PoleProximity
from qindex.fixtures import gluingFixture, referenceIntegrand
from qindex.integrator import (
    ContourSpec,
    Peripheral,
    compareIntegrands,
    compatibleAngles,
    compileFactors,
    defaultContour,
    evalEpsilonFamily,
    evalIntegral,
    integrandValues,
    isCompatible,
    mapPoints,
    pinchedExample,
    randomCompatibleAngles,
    validateContour,
    verifyPentagonIntegral,
)
from qindex.nzdata import Factor, compileIntegrand, makeIntegrand, matchIntegrands
from qindex.specialfn import QContext

CTX = QContext(0.1)


def unit(th):
    return cmath.exp(1j * th)


def test_constant_integrand_is_one():
    bi = makeIntegrand(1, [], 0)
    res = evalIntegral(bi, CTX, contour=ContourSpec((0.7,)))
    assert abs(res.value - 1) < 1e-15
    zero_dim = makeIntegrand(0, [], 0)
    assert evalIntegral(zero_dim, CTX).value == 1


def test_fig8_default_contour_is_valid():
    bi = compileIntegrand(gluingFixture("fig8"))
    c = defaultContour(bi, CTX, unit(0.3), unit(1.1))
    validateContour(bi, CTX, unit(0.3), unit(1.1), c)
    side = defaultContour(referenceIntegrand("fig8"), CTX, unit(0.3), unit(1.1), preferSides=True)
    assert "delta=0.05" in side.source


def test_contour_radius_independence():
    bi = compileIntegrand(gluingFixture("fig8"))
    s, t = unit(0.4), unit(-0.9)
    c = defaultContour(bi, CTX, s, t)
    base = evalIntegral(bi, CTX, s, t, c, tol=1e-12).value
    for f in (0.9, 1.1):
        other = ContourSpec(tuple(r * f for r in c.radii))
        v = evalIntegral(bi, CTX, s, t, other, tol=1e-12).value
        assert abs(v - base) < 1e-9 * abs(base)


@settings(max_examples=10, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
def test_conjugation_symmetry(a, b):
    bi = compileIntegrand(gluingFixture("fig8"))
    s, t = unit(a), unit(b)
    v = evalIntegral(bi, CTX, s, t, tol=1e-11).value
    w = evalIntegral(bi, CTX, s.conjugate(), t.conjugate(), tol=1e-11).value
    assert abs(v - w.conjugate()) < 1e-10 * max(1, abs(v))


def test_unknot_integral_vanishes():
    ctx = QContext(0.2)
    bi = compileIntegrand(gluingFixture("unknot"))
    rng = np.random.default_rng(7)
    for _ in range(5):
        s, t = np.exp(2j * np.pi * rng.random(2))
        res = evalIntegral(bi, ctx, s, t)
        assert abs(res.value) < 1e-8


def test_unknot_contour_encloses_both_poles():
    # G(y0 ...) factors: the contour separates -1 and -q from the outer poles
    ctx = QContext(0.2)
    bi = compileIntegrand(gluingFixture("unknot"))
    c = defaultContour(bi, ctx, unit(0.5), unit(1.3))
    validateContour(bi, ctx, unit(0.5), unit(1.3), c)


@pytest.mark.parametrize("ray", ["t=-q", "t=-q*s", "t=-s/q"])
def test_pinch_on_cpcbbbdei_rays(ray):
    bi = compileIntegrand(gluingFixture("cPcbbbdei"))
    s = unit(0.3)
    t = {"t=-q": -0.1 + 0j, "t=-q*s": -0.1 * s, "t=-s/q": -s / 0.1}[ray]
    with pytest.raises(PinchDetected):
        defaultContour(bi, CTX, 1 if ray == "t=-q" else s, t)


def test_constant_factor_pole_raises():
    bi = compileIntegrand(gluingFixture("cPcbbbdei"))
    with pytest.raises(PoleProximity):
        defaultContour(bi, CTX, 1, 1)


def test_validate_rejects_bad_contours():
    bi = compileIntegrand(gluingFixture("fig8"))
    with pytest.raises(MalformedInput):
        validateContour(bi, CTX, 1, 1, ContourSpec((1.0, 1.0)))
    with pytest.raises(MalformedInput):
        ContourSpec((-1.0,))
    p = pinchedExample(0.1)
    with pytest.raises(PoleProximity):
        validateContour(p, CTX, 1, 1, ContourSpec((1.0,)))


def test_grid_limit_raises():
    p = pinchedExample(0.02)
    c = defaultContour(p, CTX, maxGrid=64)
    with pytest.raises(NoConvergence):
        evalIntegral(p, CTX, contour=c, tol=1e-12)


def test_thread_count_does_not_change_result():
    bi = compileIntegrand(gluingFixture("k5_2"))
    s, t = unit(0.2), unit(0.7)
    a = evalIntegral(bi, CTX, s, t, threads=1, tol=1e-11)
    b = evalIntegral(bi, CTX, s, t, threads=4, tol=1e-11)
    assert a.value == b.value
    assert a.gridUsed == b.gridUsed


def test_peripheral_roundtrip():
    per = Peripheral.from_st(CTX, unit(0.4), unit(-1.2))
    assert Peripheral.from_st(CTX, per, None) is per
    assert abs(cmath.exp(per.a * CTX.h) - unit(0.4)) < 1e-15
    with pytest.raises(MalformedInput):
        Peripheral.from_st(CTX, 0, 1)


@pytest.mark.parametrize("name", ["cPcbbbdei", "m003", "unknot", "trefoil"])
def test_compiled_equals_reference_pointwise(name):
    rep = compareIntegrands(compileIntegrand(gluingFixture(name)), referenceIntegrand(name), CTX, samples=10)
    assert rep.variableMap.exact
    assert rep.ok(1e-9), rep.to_json_obj()


def test_reference_integral_agreement_m003():
    rep = compareIntegrands(compileIntegrand(gluingFixture("m003")), referenceIntegrand("m003"), CTX, samples=2, integrals=True)
    assert rep.integralRelErr < 1e-9


def _corrected(name, fix):
    ref = referenceIntegrand(name)
    facs = []
    for f in list(ref.factors) + list(ref.constPrefactors):
        key = (f.monomial, tuple(f.prefactor))
        if key == fix[0]:
            f = Factor(tuple(Fraction(v) for v in fix[1][1]), fix[1][0], f.tet, f.role)
        facs.append(f)
    return makeIntegrand(ref.dim, facs, ref.cPower, sides=ref.sides, name=name)


@pytest.mark.parametrize(
    "name,fix",
    [
        ("fig8", (((1,), (1, 2, -1)), ((2,), (1, 2, -1)))),
        ("k5_2", (((1, -2), (1, -2, -2)), ((1, -2), (1, -2, -1)))),
        ("k6_1", (((0, 0, 2), (1, 0, 1)), ((0, 0, 2), (0, 0, 1)))),
    ],
)
def test_corrected_references_match_pointwise(name, fix):
    src = compileIntegrand(gluingFixture(name))
    raw = compareIntegrands(src, referenceIntegrand(name), CTX, samples=5)
    assert not raw.ok(1e-6)
    fixed = _corrected(name, fix)
    rep = compareIntegrands(src, fixed, CTX, samples=5)
    assert rep.variableMap.exact
    assert rep.ok(1e-9), rep.to_json_obj()


def test_map_points_identity():
    bi = compileIntegrand(gluingFixture("k5_2"))
    vm = matchIntegrands(bi, bi)
    assert vm.exact
    per = Peripheral.from_st(CTX, unit(0.1), unit(0.2))
    Y = np.array([[0.5 + 0.1j], [1.2j]])
    y = mapPoints(vm, CTX, per, Y)
    cf = compileFactors(bi, CTX, unit(0.1), unit(0.2))
    assert np.allclose(integrandValues(cf, CTX, y), integrandValues(cf, CTX, Y), rtol=1e-12)


def test_pentagon_symmetric_and_special_point():
    x = y = math.pi / 10
    angles = compatibleAngles(x, x, x, y, y)
    assert isCompatible(angles)
    assert verifyPentagonIntegral(CTX, angles).relErr < 1e-8


def test_pentagon_random_angles():
    rng = np.random.default_rng(0)
    for _ in range(20):
        angles = randomCompatibleAngles(rng)
        ph = np.exp(2j * np.pi * rng.random(4))
        assert verifyPentagonIntegral(CTX, angles, *ph).passed


def test_pentagon_rejects_bad_input():
    angles = compatibleAngles(0.3, 0.3, 0.3, 0.3, 0.3)
    bad = [angles[0], angles[1], (angles[2][0] + 0.1, angles[2][1] - 0.1, angles[2][2])] + angles[3:]
    bad[2] = (bad[2][0], bad[2][1], bad[2][2] + 0.01)
    with pytest.raises(MalformedInput):
        verifyPentagonIntegral(CTX, bad)
    with pytest.raises(MalformedInput):
        verifyPentagonIntegral(CTX, angles, x=1.5)


def test_pinched_pair_diverges():
    p = pinchedExample()
    with pytest.raises(PinchDetected):
        defaultContour(p, CTX)
    fam = evalEpsilonFamily(p, CTX, 1, 1, [0.4, 0.2, 0.1, 0.05], maxGrid=1 << 14)
    assert fam.diverges
    assert fam.growthExponent < -0.5


def test_fig8_family_has_stable_limit():
    bi = compileIntegrand(gluingFixture("fig8"))
    fam = evalEpsilonFamily(bi, CTX, 1, 1, [0.04, 0.02, 0.01, 0.005])
    assert not fam.diverges
    limit = evalIntegral(bi, CTX, 1, 1).value
    errs = [abs(v - limit) for v in fam.values]
    assert errs == sorted(errs, reverse=True)
    assert errs[-1] < 2e-3


def test_family_single_point_matches_direct():
    p = pinchedExample()
    fam = evalEpsilonFamily(p, CTX, 1, 1, [0.1])
    assert abs(fam.values[0] - evalIntegral(pinchedExample(0.1), CTX).value) < 1e-12
    with pytest.raises(MalformedInput):
        evalEpsilonFamily(p, CTX, 1, 1, [0.1], direction=[1, 1])
