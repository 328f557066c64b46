"""Builtin triangulations and their hand-derived balanced integrands.

Gluing rows are in the JSON layout of :mod:`qindex.nzdata`: edge rows,
then meridian, then longitude, three columns (z, z', z'') per tetrahedron.
The reference integrands use the variables and prefactors of the worked
examples they come from; they are compared with compiled integrands
numerically, up to a monomial change of variables.
"""

from __future__ import annotations

from fractions import Fraction as F

from .errors import MalformedInput
from .nzdata import BalancedIntegrand, ContourSide, Factor, GluingData, gluingFromRows, makeIntegrand

GLUING_ROWS: dict[str, tuple[int, list[list[int]]]] = {
    "cPcbbbdei": (
        2,
        [
            [1, 1, 2, 1, 2, 1],
            [1, 1, 0, 1, 0, 1],
            [0, -1, 0, 1, 0, 0],
            [0, 0, 2, 0, 0, 0],
        ],
    ),
    "fig8": (
        2,
        [
            [2, 1, 0, 2, 1, 0],
            [0, 1, 2, 0, 1, 2],
            [1, 0, 0, 0, 0, -1],
            [1, 1, 1, 1, -1, -3],
        ],
    ),
    "m003": (
        2,
        [
            [2, 0, 1, 2, 0, 1],
            [0, 2, 1, 0, 2, 1],
            [0, -2, 0, 2, 0, 0],
            [0, -1, 0, 2, -1, 0],
        ],
    ),
    "unknot-cMcabbgds": (
        2,
        [
            [1, 2, 2, 2, 2, 2],
            [1, 0, 0, 0, 0, 0],
            [0, 0, 0, 0, 0, -2],
            [1, 0, 0, 0, -1, 0],
        ],
    ),
    "trefoil": (
        2,
        [
            [1, 0, 0, 0, 1, 0],
            [1, 2, 2, 2, 1, 2],
            [0, 0, -1, 1, 0, 0],
            [1, 0, -4, 4, -1, 0],
        ],
    ),
    "k5_2": (
        3,
        [
            [1, 1, 0, 1, 0, 0, 1, 1, 0],
            [0, 1, 1, 0, 0, 2, 0, 1, 1],
            [1, 0, 1, 1, 2, 0, 1, 0, 1],
            [-1, 0, 0, 0, 0, 1, 0, 0, 0],
            [2, 0, -3, 1, 0, -2, 0, 0, 1],
        ],
    ),
    "k6_1": (
        4,
        [
            [1, 0, 0, 0, 0, 0, 1, 1, 0, 1, 1, 0],
            [0, 1, 0, 1, 0, 0, 1, 0, 0, 0, 0, 1],
            [0, 1, 1, 0, 0, 2, 0, 1, 1, 1, 0, 0],
            [1, 0, 1, 1, 2, 0, 0, 0, 1, 0, 1, 1],
            [-1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0],
            [-1, 1, 0, 0, 1, 1, 0, -1, 0, 0, 0, -2],
        ],
    ),
}

ALIASES = {"4_1": "fig8", "unknot": "unknot-cMcabbgds", "3_1": "trefoil", "5_2": "k5_2", "6_1": "k6_1"}

DESCRIPTIONS = {
    "cPcbbbdei": "two-tetrahedron triangulation that is not 1-efficient",
    "fig8": "figure-eight knot complement (4_1)",
    "m003": "sister of the figure-eight knot",
    "unknot-cMcabbgds": "two-tetrahedron triangulation of the unknot complement",
    "trefoil": "trefoil knot complement",
    "k5_2": "5_2 knot complement, homological longitude",
    "k6_1": "6_1 knot complement, homological longitude",
}


def fixtureNames() -> list[str]:
    return list(GLUING_ROWS)


def canonicalName(name: str) -> str:
    name = ALIASES.get(name, name)
    if name not in GLUING_ROWS:
        raise MalformedInput(f"unknown fixture {name!r}; known: {', '.join(GLUING_ROWS)}")
    return name


def gluingFixture(name: str) -> GluingData:
    name = canonicalName(name)
    n, rows = GLUING_ROWS[name]
    return gluingFromRows(n, rows, name)


def _G(c0, cm, cl, *mon) -> Factor:
    return Factor((F(c0), F(cm), F(cl)), tuple(mon))


def _sides(*entries) -> tuple[ContourSide, ...]:
    return tuple(ContourSide(side, F(se), F(te)) for side, se, te in entries)


# Each entry: factors of the balanced integrand (prefactor exponents of
# (-q), s = e_mu, t = e_lambda, then the monomial in y) and the side of the
# unit circle of each integration variable.
_REFERENCE: dict[str, tuple[int, list[Factor], tuple[ContourSide, ...]]] = {
    "cPcbbbdei": (
        1,
        [
            _G(0, 0, 1),
            _G(0, 0, -1),
            _G(0, 0, 0, 1),
            _G(1, 0, -1, -1),
            _G(1, 1, -1, -1),
            _G(0, -1, 2, 1),
        ],
        _sides((-1, 0, 0)),
    ),
    "fig8": (
        1,
        [
            _G(0, 0, 0, -1),
            _G(0, -1, 0, -1),
            _G(0, 0, 1, -1),
            _G(0, -1, 1, -1),
            _G(1, 0, -1, 2),
            _G(1, 2, -1, 1),
        ],
        _sides((1, 0, 0)),
    ),
    "m003": (
        1,
        [
            _G(1, F(-1, 2), -2, -2),
            _G(1, F(1, 2), -2, -2),
            _G(0, 0, 0, 1),
            _G(0, F(1, 2), 0, 1),
            _G(0, 0, 2, 1),
            _G(0, F(-1, 2), 2, 1),
        ],
        _sides((1, 0, 0)),
    ),
    "unknot-cMcabbgds": (
        1,
        [
            _G(2, 0, 0),
            _G(0, F(-1, 2), 0),
            _G(2, 0, -2),
            _G(-1, F(1, 2), 2),
            _G(-1, 0, 0, 1),
            _G(0, 0, 0, -1),
        ],
        _sides((1, 0, 0)),
    ),
    "trefoil": (
        1,
        [
            _G(1, 2, -1),
            _G(1, -2, 1),
            _G(0, 0, 0, -1),
            _G(0, -1, 0, -1),
            _G(0, 3, -1, 1),
            _G(0, -2, 1, 1),
        ],
        _sides((1, 0, 0)),
    ),
    "k5_2": (
        2,
        [
            _G(0, 0, 0, -1, 0),
            _G(0, 1, 0, -1, 0),
            _G(0, 2, 0, -1, 0),
            _G(1, -2, -2, 1, -2),
            _G(1, 0, 0, 1, -1),
            _G(1, -3, -1, 1, -1),
            _G(0, 0, 0, 0, 1),
            _G(0, 1, 1, 0, 1),
            _G(0, 1, 1, 0, 2),
        ],
        _sides((1, 0, 0), (-1, F(1, 2), F(1, 2))),
    ),
    "k6_1": (
        3,
        [
            _G(0, 0, 0, -1, 0, 0),
            _G(0, 0, 0, 0, -1, 0),
            _G(0, 1, 0, 0, -1, 0),
            _G(0, -2, 0, -1, 1, 0),
            _G(1, -1, -1, 0, 1, -2),
            _G(F(1, 2), 0, -1, 0, 0, -1),
            _G(F(3, 2), 0, 0, 1, 0, -1),
            _G(F(3, 2), 0, -1, 1, 1, -1),
            _G(F(-1, 2), 0, 1, 0, -1, 1),
            _G(F(1, 2), 2, 1, 1, -1, 1),
            _G(F(-1, 2), 0, 0, -1, 1, 1),
            _G(1, 0, 1, 0, 0, 2),
        ],
        _sides((1, 0, 0), (1, 0, 0), (-1, 0, F(1, 2))),
    ),
}


def referenceIntegrand(name: str) -> BalancedIntegrand:
    """Hand-derived balanced integrand of a fixture, with its contour sides."""
    name = canonicalName(name)
    dim, factors, sides = _REFERENCE[name]
    n = GLUING_ROWS[name][0]
    return makeIntegrand(dim, factors, n, sides=sides, name=name + " (reference)")
