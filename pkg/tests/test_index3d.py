from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from qindex.errors import InconsistentData, NonConvergent, NoStrictAngles
from qindex.fixtures import gluingFixture
from qindex.index3d import (
    CONVENTIONS,
    _column_reduce,
    fourierGrid,
    holonomyLattice,
    latticeIndex,
    latticeIndexTable,
    resolvePrefactorConvention,
)
from qindex.nzdata import gluingFromRows
from qindex.qseries import tetIndexSeries

# Published 4_1 index I(0,0) in the variable q^2 of this package:
# 1 - 2q - 3q^2 + 2q^3 + 8q^4 + 18q^5 + 18q^6 + 14q^7 - 12q^8 - 52q^9
FIG8_00 = {0: 1, 4: -2, 8: -3, 12: 2, 16: 8, 20: 18, 24: 18, 28: 14, 32: -12, 36: -52}

ONE_TET = gluingFromRows(1, [[2, 2, 2], [1, -1, 0], [1, 0, -1]], name="one-tet")


def test_fig8_lattice_matches_published_series():
    r = latticeIndex(gluingFixture("fig8"), 0, 0, 40)
    assert dict(r.series.items()) == FIG8_00
    assert r.convention == "derived-holonomy"


def test_m003_shares_fig8_zero_coefficient():
    a = latticeIndex(gluingFixture("fig8"), 0, 0, 24).series
    b = latticeIndex(gluingFixture("m003"), 0, 0, 24).series
    assert a == b


def test_m003_half_integer_meridian_lattice():
    hl = holonomyLattice(gluingFixture("m003"))
    assert hl.scale == 2
    r = latticeIndex(gluingFixture("m003"), Fraction(1, 2), 0, 16)
    assert r.series.trunc == 16
    assert dict(latticeIndex(gluingFixture("m003"), 0, 1, 24).series.items()) == {}


@pytest.mark.parametrize("name", ["fig8", "m003", "k5_2"])
def test_shell_cap_does_not_change_sums(name):
    g = gluingFixture(name)
    for m, e in [(0, 0), (1, 0), (1, -1)]:
        a = latticeIndex(g, m, e, 12, shellCap=20)
        b = latticeIndex(g, m, e, 12, shellCap=40)
        assert a.series == b.series
        assert a.shells <= 20


def test_trefoil_sum_stable_without_angle_check():
    g = gluingFixture("trefoil")
    with pytest.raises(NoStrictAngles):
        latticeIndex(g, 0, 0, 12)
    a = latticeIndex(g, 0, 0, 12, shellCap=40, checkAngles=False).series
    b = latticeIndex(g, 0, 0, 12, shellCap=80, checkAngles=False).series
    assert a == b


def test_cpcbbbdei_is_rejected():
    g = gluingFixture("cPcbbbdei")
    with pytest.raises(NoStrictAngles):
        latticeIndex(g, 0, 0, 12)
    with pytest.raises(NonConvergent):
        latticeIndex(g, 0, 0, 12, checkAngles=False)
    assert NoStrictAngles.exit_code == NonConvergent.exit_code == 4


@pytest.mark.parametrize("name", ["fig8", "k5_2"])
def test_coefficients_are_integers(name):
    t = latticeIndexTable(gluingFixture(name), 1, 1, 12)
    assert len(t.entries) == 9
    for s in t.entries.values():
        assert all(isinstance(v, int) for _, v in s.items())


def test_one_tet_gluing_reduces_to_tetrahedron_index():
    s = latticeIndex(ONE_TET, 0, 0, 40).series
    assert s.agrees_with(tetIndexSeries(0, 0, 20).double())


def test_literal_conventions_reject_non_integer_points():
    with pytest.raises(InconsistentData):
        latticeIndex(ONE_TET, 0, 1, 20, "once-per-point")


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.integers(1, 5), st.lists(st.integers(-6, 6), min_size=15, max_size=15))
def test_column_reduce_is_unimodular(rows, cols, flat):
    M = [flat[r * cols : (r + 1) * cols] for r in range(rows)]
    H, U = _column_reduce(M)
    Ms, Hs, Us = sp.Matrix(M), sp.Matrix(H), sp.Matrix(U)
    assert Ms * Us == Hs
    assert abs(Us.det()) == 1
    # echelon: each column's leading row strictly increases
    leads = []
    for j in range(Hs.cols):
        nz = [i for i in range(Hs.rows) if Hs[i, j] != 0]
        if nz:
            leads.append(nz[0])
    assert leads == sorted(set(leads))


def test_fig8_fourier_matches_lattice():
    g = gluingFixture("fig8")
    grid = fourierGrid(g, 0.1, 32)
    assert grid.oddPart() < 1e-12
    lat = latticeIndex(g, 0, 0, 48).series.evaluate(0.1)
    assert abs(grid.coefficient(0, 0) - lat) < 1e-9
    assert abs(grid.coefficient(0, 0) - 0.9797020818) < 1e-10


def test_fig8_convention_is_derived_holonomy():
    rep = resolvePrefactorConvention(gluingFixture("fig8"))
    assert rep.convention == "derived-holonomy"
    assert rep.matching == ["derived-holonomy"]
    assert rep.errors["once-per-point"] > 1e-3


def test_tie_break_prefers_once_per_point():
    rep = resolvePrefactorConvention(ONE_TET, gridSize=96, probes=((0, 0), (1, 0)))
    assert rep.matching == list(CONVENTIONS)
    assert rep.convention == "once-per-point"
