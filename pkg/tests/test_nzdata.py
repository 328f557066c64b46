import itertools
import json
import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from qindex.errors import InconsistentData, MalformedInput, SingularSystem
from qindex.fixtures import fixtureNames, gluingFixture, referenceIntegrand
from qindex.nzdata import (
    Factor,
    Infeasible,
    _primes,
    _system_matrix,
    angleMap,
    compileIntegrand,
    findStrictAngles,
    gluingFromRows,
    makeIntegrand,
    makeQuadSystem,
    mapFactors,
    matchIntegrands,
    parametrize,
    parseGluing,
    quadCandidates,
    reducedAB,
    selectQuad,
    singularityRays,
    solveAngles,
    symplecticDefect,
    verifyIntegrandInvariants,
)

ALL = fixtureNames()


def rotated(g, rot):
    """Same triangulation with the shape labels of tetrahedron j cycled by rot[j]."""
    rows = []
    for r in g.rows:
        nr = []
        for j in range(g.n):
            t = r[3 * j : 3 * j + 3]
            k = rot[j]
            nr += t[k:] + t[:k]
        rows.append(nr)
    return gluingFromRows(g.n, rows)


def test_parse_matrices():
    g = gluingFixture("cPcbbbdei")
    A, B, C = g.matrices()
    assert A.tolist() == [[1, 1], [1, 1]]
    assert B.tolist() == [[1, 2], [1, 0]]
    assert C.tolist() == [[2, 1], [0, 1]]
    # mu = -beta_0 + alpha_1
    assert list(g.meridian) == [0, -1, 0, 1, 0, 0]
    f = gluingFixture("4_1")
    A, B, C = f.matrices()
    assert A.tolist() == [[2, 2], [0, 0]]
    assert B.tolist() == [[1, 1], [1, 1]]
    assert C.tolist() == [[0, 0], [2, 2]]


def test_parse_roundtrip_and_errors():
    g = gluingFixture("fig8")
    assert parseGluing(g.to_json()) == gluingFromRows(g.n, g.rows)
    bad = g.to_json_obj()
    bad["rows"][0] = bad["rows"][0][:-1]
    with pytest.raises(MalformedInput):
        parseGluing(json.dumps(bad))
    with pytest.raises(MalformedInput):
        parseGluing("{not json")
    with pytest.raises(MalformedInput):
        parseGluing(json.dumps({"rows": []}))
    with pytest.raises(MalformedInput):
        gluingFromRows(0, [])
    with pytest.raises(MalformedInput):
        gluingFromRows(1, [[1, 1, 1], [0, 0, 0], [0, 0, 1.5]])
    inconsistent = [list(r) for r in g.rows]
    inconsistent[0][0] += 1
    with pytest.raises(InconsistentData):
        gluingFromRows(g.n, inconsistent)


def test_reduced_ab():
    A, B, nu = reducedAB(gluingFixture("4_1"))
    assert A.tolist() == [[1, 1], [-1, -1]]
    assert B.tolist() == [[-1, -1], [1, 1]]
    A, B, nu = reducedAB(gluingFixture("cPcbbbdei"))
    assert A.tolist() == [[0, -1], [0, 1]]
    assert B.tolist() == [[1, -1], [-1, 1]]
    assert nu.tolist() == [-3, -1]


@pytest.mark.parametrize("name", ["cPcbbbdei", "fig8"])
def test_standard_quad_selected(name):
    q = selectQuad(gluingFixture(name))
    assert q.choice == (0, 0)
    assert q.droppedRow == 0
    assert symplecticDefect(q.aPrime, q.bPrime) == 0


def test_quad_search_advances_past_singular_standard():
    h = rotated(gluingFixture("fig8"), (0, 2))
    std = (0,) * h.n
    # rank oracle: B' of the standard quad is singular for every dropped row
    for j in range(h.n):
        Bp = sp.Matrix(_primes(h, std, j)[1][:-1])
        assert Bp.rank() < Bp.rows
    q = selectQuad(h)
    assert q.choice != std
    assert sp.Matrix(q.bPrime[:-1]).rank() == h.n
    assert _system_matrix(h, q.choice, q.droppedRow, q.droppedQuad).det() != 0


def test_quad_candidates_order():
    c = list(quadCandidates(2))
    assert c[0] == (0, 0)
    assert len(c) == 9
    assert c == sorted(c)


def test_solve_angles_matches_parametrizations():
    g = gluingFixture("cPcbbbdei")
    q = selectQuad(g)
    a0, e0, mu, lam = 0.7, 0.2, 0.3, 0.5
    s = solveAngles(g, q, mu, lam, eps=[e0, -e0], quadAngles=[a0])
    assert math.isclose(s.alpha[0], a0)
    assert math.isclose(s.beta[0], math.pi - a0 - lam / 2)
    assert math.isclose(s.gamma[1], a0 - e0 + lam - mu)
    f = gluingFixture("fig8")
    q = selectQuad(f)
    s = solveAngles(f, q, mu, lam, quadAngles=[a0])
    assert math.isclose(s.beta[1], math.pi - 2 * a0 - lam / 2 + 2 * mu)
    s = solveAngles(f, q, 0, 0, quadAngles=[math.pi / 3])
    assert np.allclose(s.angles, math.pi / 3)


def test_solve_angles_errors():
    g = gluingFixture("fig8")
    q = selectQuad(g)
    with pytest.raises(InconsistentData):
        solveAngles(g, q, 0, 0, eps=[0.1, 0.1])
    with pytest.raises(MalformedInput):
        solveAngles(g, q, 0, 0, quadAngles=[1, 2])


@settings(max_examples=40, deadline=None)
@given(
    st.sampled_from(["cPcbbbdei", "fig8", "m003", "k5_2"]),
    st.floats(-1, 1),
    st.floats(-1, 1),
    st.lists(st.floats(-1, 1), min_size=3, max_size=3),
    st.lists(st.floats(0.1, 2.5), min_size=2, max_size=2),
)
def test_solve_parametrize_roundtrip(name, mu, lam, epsraw, qa):
    g = gluingFixture(name)
    q = selectQuad(g)
    eps = np.array(epsraw[: g.n - 1] + [0.0])
    eps[-1] = -eps[:-1].sum()
    kq = len(q.keptQuads)
    s = solveAngles(g, q, mu, lam, eps=eps, quadAngles=qa[:kq])
    th = s.angles.reshape(g.n, 3)
    assert np.allclose(th.sum(axis=1), math.pi)
    qa2, eps2, mu2, lam2 = parametrize(g, q, s)
    assert np.allclose(qa2, qa[:kq])
    assert np.allclose(eps2, eps, atol=1e-12)
    assert math.isclose(mu2, mu, abs_tol=1e-12) and math.isclose(lam2, lam, abs_tol=1e-12)


@pytest.mark.parametrize(
    "name,strict",
    [("fig8", True), ("m003", True), ("k5_2", True), ("k6_1", True), ("cPcbbbdei", False), ("unknot", False), ("trefoil", False)],
)
def test_strict_angle_outcomes(name, strict):
    g = gluingFixture(name)
    r = findStrictAngles(g)
    if strict:
        assert r.strict
        A, B, C = g.matrices()
        th = r.angles.reshape(g.n, 3)
        assert np.allclose(A @ th[:, 0] + B @ th[:, 1] + C @ th[:, 2], 2 * math.pi)
        assert np.allclose(r.eps, 0, atol=1e-12)
    else:
        assert isinstance(r, Infeasible)
        assert r.margin <= 1e-12
    assert repr(findStrictAngles(g)) == repr(r)


def test_fig8_geometric_structure_balances():
    g = gluingFixture("fig8")
    A, B, C = g.matrices()
    th = np.full(2, math.pi / 3)
    assert np.allclose(A @ th + B @ th + C @ th, 2 * math.pi)
    assert math.isclose(findStrictAngles(g).minAngle, math.pi / 3)


def test_unknot_needs_large_angle():
    r = findStrictAngles(gluingFixture("unknot"))
    assert isinstance(r, Infeasible)
    assert r.margin < 0


@pytest.mark.parametrize("name", ALL)
def test_compile_invariants(name):
    g = gluingFixture(name)
    bi = compileIntegrand(g)
    assert bi.dim == g.n - 1
    assert bi.cPower == g.n
    assert verifyIntegrandInvariants(bi) == []
    for f in bi.allFactors:
        assert all(isinstance(v, int) for v in f.monomial)
        assert all(x.denominator in (1, 2, 3, 4, 6, 8, 12) for x in f.prefactor)


@pytest.mark.parametrize("name", ["cPcbbbdei", "m003", "unknot", "trefoil"])
def test_compiled_matches_reference_exactly(name):
    vm = matchIntegrands(compileIntegrand(gluingFixture(name)), referenceIntegrand(name))
    assert vm is not None and vm.exact


@pytest.mark.parametrize(
    "name,faulty",
    [
        ("fig8", (((2,), (1, 2, -1)), ((1,), (1, 2, -1)))),
        ("k6_1", (((0, 0, 2), (0, 0, 1)), ((0, 0, 2), (1, 0, 1)))),
    ],
)
def test_reference_typos_are_single_factor(name, faulty):
    src = compileIntegrand(gluingFixture(name))
    ref = referenceIntegrand(name)
    vm = matchIntegrands(src, ref)
    assert vm.total - vm.matched == 1
    mapped = sorted((m, tuple(map(Fraction, p))) for m, p in mapFactors(src, vm))
    target = sorted((f.monomial, tuple(f.prefactor)) for f in ref.allFactors)
    extra = [x for x in mapped if x not in target]
    missing = [x for x in target if x not in mapped]
    mine, theirs = faulty
    assert [(extra[0][0], tuple(int(v) if v.denominator == 1 else v for v in extra[0][1]))] == [mine]
    assert [(missing[0][0], tuple(int(v) if v.denominator == 1 else v for v in missing[0][1]))] == [theirs]


@pytest.mark.parametrize("name", ["cPcbbbdei", "fig8", "m003", "unknot", "trefoil"])
def test_quad_independence(name):
    g = gluingFixture(name)
    base = compileIntegrand(g)
    seen = 0
    for choice in quadCandidates(g.n):
        for j, i in itertools.product(range(g.n), range(g.n)):
            try:
                q = makeQuadSystem(g, choice, j, i)
            except SingularSystem:
                continue
            other = compileIntegrand(g, q)
            vm = matchIntegrands(other, base)
            assert vm is not None and vm.exact, (choice, j, i)
            seen += 1
    assert seen >= 8


def _unimodular(draw_ops, dim):
    U = sp.eye(dim)
    for a, b, c in draw_ops:
        a, b = a % dim, b % dim
        if a != b:
            U[a, :] = U[a, :] + c * U[b, :]
    return U


@settings(max_examples=25, deadline=None)
@given(
    st.sampled_from(["fig8", "k5_2", "k6_1", "m003"]),
    st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(-2, 2)), max_size=4),
    st.lists(st.tuples(st.integers(-3, 3), st.integers(-2, 2), st.integers(-2, 2)), min_size=3, max_size=3),
    st.booleans(),
)
def test_matcher_recovers_random_monomial_maps(name, ops, kap, flip):
    src = compileIntegrand(gluingFixture(name))
    dim = src.dim
    U = _unimodular(ops, dim)
    if flip:
        U[0, :] = -U[0, :]
    kappa = [tuple(Fraction(v, 2) for v in kap[j]) for j in range(dim)]
    facs = []
    for f in src.factors:
        mon = tuple(int(sum(f.monomial[j] * U[j, i] for j in range(dim))) for i in range(dim))
        pre = tuple(f.prefactor[c] + sum(f.monomial[j] * kappa[j][c] for j in range(dim)) for c in range(3))
        facs.append(Factor(pre, mon, f.tet, f.role))
    facs += list(src.constPrefactors)
    dst = makeIntegrand(dim, facs, src.cPower)
    vm = matchIntegrands(src, dst)
    assert vm is not None and vm.exact
    assert abs(sp.Matrix(vm.U).det()) == 1


def test_singularity_rays_cpcbbbdei():
    rays = {r.as_tuple() for r in singularityRays(compileIntegrand(gluingFixture("cPcbbbdei")))}
    assert (0, 1, 1, -1) in rays  # -q Sigma_{0,1}
    assert (1, -1, -1, -1) in rays  # -q^-1 Sigma_{1,-1}
    # the full set: Sigma_{0,+-1}, -q Sigma_{0,1}, -q^-1 Sigma_{0,-1}, -q Sigma_{-1,1}, -q^-1 Sigma_{1,-1}
    assert rays == {(-1, 1, 1, -1), (0, -1, -1, -1), (0, -1, 0, 1), (0, 1, 0, 1), (0, 1, 1, -1), (1, -1, -1, -1)}


def test_no_opposing_factors_no_rays():
    bi = makeIntegrand(1, [Factor((Fraction(1), Fraction(0), Fraction(0)), (1,)), Factor((Fraction(0), Fraction(1), Fraction(0)), (2,))], 1)
    assert singularityRays(bi) == []


def test_angle_map_rationals():
    g = gluingFixture("m003")
    am = angleMap(g, selectQuad(g))
    assert all(isinstance(x, Fraction) for x in am.const + am.muCol + am.lamCol)
    assert sum(am.const[0:3]) == 1
