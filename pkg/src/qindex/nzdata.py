"""Gluing data of ideal triangulations and the balanced integrands built from them.

Angles are handled in units of pi throughout the exact layer: an angle
vector theta is stored as theta/pi with rational entries, and the
peripheral holonomies enter as mu/pi and lambda/(2 pi), the exponents of
e_mu = (-q)^(mu/pi) and e_lambda = (-q)^(lambda/(2 pi)).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
import sympy as sp
from scipy.optimize import linprog

from .errors import InconsistentData, MalformedInput, NoQuadFound, SingularSystem

ROLES = ("alpha", "beta", "gamma")
Triple = tuple[Fraction, Fraction, Fraction]


def _frac(x) -> Fraction:
    if isinstance(x, sp.Rational):
        return Fraction(int(x.p), int(x.q))
    return Fraction(x)


def _to_sympy(rows) -> sp.Matrix:
    return sp.Matrix([[sp.Rational(v.numerator, v.denominator) if isinstance(v, Fraction) else sp.Integer(v) for v in r] for r in rows])


# ---------------------------------------------------------------------------
# gluing data


@dataclass(frozen=True)
class GluingData:
    n: int
    aBar: tuple[tuple[int, ...], ...]
    bBar: tuple[tuple[int, ...], ...]
    cBar: tuple[tuple[int, ...], ...]
    meridian: tuple[int, ...]
    longitude: tuple[int, ...]
    name: str = ""

    @property
    def edgeRows(self) -> tuple[tuple[int, ...], ...]:
        return tuple(
            tuple(v for j in range(self.n) for v in (self.aBar[i][j], self.bBar[i][j], self.cBar[i][j]))
            for i in range(self.n)
        )

    @property
    def rows(self) -> list[list[int]]:
        return [list(r) for r in self.edgeRows] + [list(self.meridian), list(self.longitude)]

    def matrices(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return np.array(self.aBar, dtype=int), np.array(self.bBar, dtype=int), np.array(self.cBar, dtype=int)

    def to_json_obj(self) -> dict:
        return {"n": self.n, "rows": self.rows}

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())


def gluingFromRows(n: int, rows: Sequence[Sequence[int]], name: str = "") -> GluingData:
    """Build and validate gluing data from n edge rows plus meridian and longitude."""
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise MalformedInput(f"tetrahedron count must be a positive integer, got {n!r}")
    rows = list(rows)
    if len(rows) != n + 2:
        raise MalformedInput(f"expected {n + 2} rows (edges, meridian, longitude), got {len(rows)}")
    for k, r in enumerate(rows):
        if not isinstance(r, (list, tuple)) or len(r) != 3 * n:
            raise MalformedInput(f"row {k} must have {3 * n} entries")
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in r):
            raise MalformedInput(f"row {k} must contain integers only")
    edges = rows[:n]
    aBar = tuple(tuple(edges[i][3 * j] for j in range(n)) for i in range(n))
    bBar = tuple(tuple(edges[i][3 * j + 1] for j in range(n)) for i in range(n))
    cBar = tuple(tuple(edges[i][3 * j + 2] for j in range(n)) for i in range(n))
    g = GluingData(n, aBar, bBar, cBar, tuple(rows[n]), tuple(rows[n + 1]), name)
    _validate(g)
    return g


def _validate(g: GluingData) -> None:
    A, B, C = g.matrices()
    total = (A + B + C).sum(axis=0)
    if not np.all(total == 6):
        raise InconsistentData(f"each tetrahedron must meet the edges in 6 edge slots; got column sums {total.tolist()}")
    for name, M in (("z", A), ("z'", B), ("z''", C)):
        cs = M.sum(axis=0)
        if not np.all(cs == 2):
            raise InconsistentData(f"shape {name} must appear exactly twice around the edges of each tetrahedron; got {cs.tolist()}")


def parseGluing(text: str, name: str = "") -> GluingData:
    """Parse the JSON gluing format ``{"n": int, "rows": [[int]*3n]*(n+2)}``."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict) or "n" not in obj or "rows" not in obj:
        raise MalformedInput('gluing JSON must be an object with keys "n" and "rows"')
    return gluingFromRows(obj["n"], obj["rows"], name or str(obj.get("name", "")))


def reducedAB(g: GluingData) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """A = Abar - Bbar, B = Cbar - Bbar and the sign exponents nu = -Bbar 1 from eliminating z'."""
    if g.n < 1:
        raise MalformedInput("empty triangulation")
    A_, B_, C_ = g.matrices()
    return A_ - B_, C_ - B_, -B_.sum(axis=1)


def _peripheral_split(row: Sequence[int], n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    r = np.array(row, dtype=object).reshape(n, 3)
    return r[:, 0], r[:, 1], r[:, 2]


# ---------------------------------------------------------------------------
# quad systems and the affine angle parametrization


@dataclass(frozen=True)
class QuadSystem:
    """A choice of quad per tetrahedron plus the dropped edge row and quad angle.

    ``choice[i]`` is the index (0, 1, 2 for alpha, beta, gamma) of the angle
    kept as a parameter in tetrahedron i.  The edge row ``droppedRow`` is
    replaced by the meridian in (A'|B'); the quad angle of tetrahedron
    ``droppedQuad`` is eliminated with the longitude.
    """

    choice: tuple[int, ...]
    droppedRow: int
    droppedQuad: int
    aPrime: tuple[tuple[Fraction, ...], ...]
    bPrime: tuple[tuple[Fraction, ...], ...]
    det: Fraction

    @property
    def keptQuads(self) -> tuple[int, ...]:
        return tuple(i for i in range(len(self.choice)) if i != self.droppedQuad)

    @property
    def keptRows(self) -> tuple[int, ...]:
        return tuple(i for i in range(len(self.choice)) if i != self.droppedRow)


def _role_columns(g: GluingData, choice: Sequence[int]):
    """Columns of (A|B) and the peripheral (A|B) rows for a quad choice.

    With K the kept angle, E the eliminated one and S the solved one
    (cyclically after K), A collects the K-exponents minus E-exponents and
    B the S-exponents minus E-exponents; the standard quad gives
    A = Abar - Bbar, B = Cbar - Bbar.
    """
    n = g.n
    mats = [np.array(m, dtype=object) for m in (g.aBar, g.bBar, g.cBar)]
    mer = _peripheral_split(g.meridian, n)
    lon = _peripheral_split(g.longitude, n)
    A = np.zeros((n, n), dtype=object)
    B = np.zeros((n, n), dtype=object)
    Am = np.zeros(n, dtype=object)
    Bm = np.zeros(n, dtype=object)
    Al = np.zeros(n, dtype=object)
    Bl = np.zeros(n, dtype=object)
    for i, c in enumerate(choice):
        K, E, S = c, (c + 1) % 3, (c + 2) % 3
        A[:, i] = mats[K][:, i] - mats[E][:, i]
        B[:, i] = mats[S][:, i] - mats[E][:, i]
        Am[i] = mer[K][i] - mer[E][i]
        Bm[i] = mer[S][i] - mer[E][i]
        Al[i] = Fraction(int(lon[K][i] - lon[E][i]), 2)
        Bl[i] = Fraction(int(lon[S][i] - lon[E][i]), 2)
    return A, B, (Am, Bm), (Al, Bl)


def _primes(g: GluingData, choice: Sequence[int], j: int):
    A, B, (Am, Bm), (Al, Bl) = _role_columns(g, choice)
    Ap = [[Fraction(int(v)) for v in A[r]] for r in range(g.n)]
    Bp = [[Fraction(int(v)) for v in B[r]] for r in range(g.n)]
    Ap[j] = [Fraction(int(v)) for v in Am]
    Bp[j] = [Fraction(int(v)) for v in Bm]
    Ap.append([Fraction(v) for v in Al])
    Bp.append([Fraction(v) for v in Bl])
    return Ap, Bp


def _system_matrix(g: GluingData, choice: Sequence[int], droppedRow: int, droppedQuad: int) -> sp.Matrix:
    """Rows of theta -> (tet sums, kept quad angles, kept edge sums, mu, lambda)."""
    n = g.n
    rows: list[list[int]] = []
    for i in range(n):
        r = [0] * (3 * n)
        r[3 * i : 3 * i + 3] = [1, 1, 1]
        rows.append(r)
    for i in range(n):
        if i == droppedQuad:
            continue
        r = [0] * (3 * n)
        r[3 * i + choice[i]] = 1
        rows.append(r)
    for e, row in enumerate(g.edgeRows):
        if e != droppedRow:
            rows.append(list(row))
    rows.append(list(g.meridian))
    rows.append(list(g.longitude))
    return sp.Matrix(rows)


def quadCandidates(n: int):
    """All quad choices in lexicographic order; the standard quad (all alpha) comes first."""
    return itertools.product(range(3), repeat=n)


def symplecticDefect(Ap, Bp) -> int:
    """Largest |(A'B'^T)_{ij} - (A'B'^T)_{ji}| over the rows above the longitude."""
    M = _to_sympy(Ap[:-1]) * _to_sympy(Bp[:-1]).T
    return int(max((abs(M[i, k] - M[k, i]) for i in range(M.rows) for k in range(M.cols)), default=0))


def makeQuadSystem(g: GluingData, choice: Sequence[int], droppedRow: int, droppedQuad: int) -> QuadSystem:
    """Quad system for explicit choices; raises SingularSystem when it does not parametrize."""
    choice = tuple(int(c) for c in choice)
    if len(choice) != g.n or any(c not in (0, 1, 2) for c in choice):
        raise MalformedInput("quad choice must list one of 0, 1, 2 per tetrahedron")
    Ap, Bp = _primes(g, choice, droppedRow)
    det = _to_sympy(Bp[:-1]).det()
    if det == 0:
        raise SingularSystem("B' is singular for this quad and dropped row")
    if _system_matrix(g, choice, droppedRow, droppedQuad).det() == 0:
        raise SingularSystem("the longitude does not determine the dropped quad angle")
    return QuadSystem(choice, droppedRow, droppedQuad, tuple(map(tuple, Ap)), tuple(map(tuple, Bp)), _frac(det))


def selectQuad(g: GluingData) -> QuadSystem:
    """First admissible quad system in the deterministic search order.

    Quads are scanned lexicographically starting from the standard one, the
    dropped edge row ascending, the dropped quad angle descending (so the
    earliest tetrahedra keep their parameters).
    """
    for choice in quadCandidates(g.n):
        for j in range(g.n):
            Ap, Bp = _primes(g, choice, j)
            det = _to_sympy(Bp[:-1]).det()
            if det == 0:
                continue
            for i in reversed(range(g.n)):
                if _system_matrix(g, choice, j, i).det() != 0:
                    return QuadSystem(tuple(choice), j, i, tuple(map(tuple, Ap)), tuple(map(tuple, Bp)), _frac(det))
    raise NoQuadFound("no quad system gives an invertible B'")


@dataclass(frozen=True)
class AngleMap:
    """theta/pi as an affine function of the parameters, each also divided by pi.

    ``theta/pi = const + quad @ (p/pi) + eps @ (eps/pi) + mu * (mu/pi) + lam * (lambda/pi)``
    with ``p`` the kept quad angles and ``eps`` the kept edge imbalances.
    """

    quad: QuadSystem
    const: tuple[Fraction, ...]
    quadCols: tuple[tuple[Fraction, ...], ...]
    epsCols: tuple[tuple[Fraction, ...], ...]
    muCol: tuple[Fraction, ...]
    lamCol: tuple[Fraction, ...]


def angleMap(g: GluingData, quad: QuadSystem) -> AngleMap:
    n = g.n
    S = _system_matrix(g, quad.choice, quad.droppedRow, quad.droppedQuad)
    if S.det() == 0:
        raise SingularSystem("angle parametrization is singular")
    Sinv = S.inv()
    # right-hand side layout: n ones (pi), n-1 quad params, n-1 edge sums 2 + eps, mu, lambda
    kq = len(quad.keptQuads)
    rhs_const = sp.Matrix([1] * n + [0] * kq + [2] * (n - 1) + [0, 0])
    const = Sinv * rhs_const
    cols = [Sinv[:, k] for k in range(S.cols)]
    quadCols = [cols[n + k] for k in range(kq)]
    epsCols = [cols[n + kq + k] for k in range(n - 1)]

    def fr(v):
        return tuple(_frac(x) for x in v)

    return AngleMap(
        quad,
        fr(const),
        tuple(fr(c) for c in quadCols),
        tuple(fr(c) for c in epsCols),
        fr(cols[-2]),
        fr(cols[-1]),
    )


# ---------------------------------------------------------------------------
# angle structures


@dataclass(frozen=True)
class AngleStructure:
    alpha: tuple[float, ...]
    beta: tuple[float, ...]
    gamma: tuple[float, ...]
    eps: tuple[float, ...]
    mu: float
    lam: float

    @property
    def angles(self) -> np.ndarray:
        return np.array([a for i in range(len(self.alpha)) for a in (self.alpha[i], self.beta[i], self.gamma[i])])

    @property
    def minAngle(self) -> float:
        return float(self.angles.min())

    @property
    def strict(self) -> bool:
        return self.minAngle > 0


@dataclass(frozen=True)
class Infeasible:
    """No strict angle structure: the best achievable minimum angle is ``margin`` (<= 0)."""

    margin: float
    reason: str = ""


def _structure_from_theta(g: GluingData, theta: np.ndarray) -> AngleStructure:
    n = g.n
    th = np.asarray(theta, dtype=float).reshape(n, 3)
    A, B, C = g.matrices()
    eps = A @ th[:, 0] + B @ th[:, 1] + C @ th[:, 2] - 2 * math.pi
    mu = float(np.dot(g.meridian, th.reshape(-1)))
    lam = float(np.dot(g.longitude, th.reshape(-1)))
    return AngleStructure(tuple(th[:, 0]), tuple(th[:, 1]), tuple(th[:, 2]), tuple(eps), mu, lam)


def solveAngles(
    g: GluingData,
    quad: QuadSystem,
    mu: float,
    lam: float,
    eps: Sequence[float] | None = None,
    quadAngles: Sequence[float] | None = None,
) -> AngleStructure:
    """Angle structure with prescribed kept quad angles, edge imbalances and holonomies.

    ``eps`` is the full edge-imbalance vector (it must sum to zero);
    ``quadAngles`` lists the kept quad angles in tetrahedron order, skipping
    ``quad.droppedQuad``.
    """
    n = g.n
    eps = np.zeros(n) if eps is None else np.asarray(eps, dtype=float)
    if eps.shape != (n,):
        raise MalformedInput(f"eps must have {n} entries")
    if abs(eps.sum()) > 1e-9 * (1 + np.abs(eps).sum()):
        raise InconsistentData("edge imbalances must sum to zero")
    kq = len(quad.keptQuads)
    qa = np.zeros(kq) if quadAngles is None else np.asarray(quadAngles, dtype=float)
    if qa.shape != (kq,):
        raise MalformedInput(f"expected {kq} quad angles")
    am = angleMap(g, quad)
    epsKept = np.array([eps[j] for j in quad.keptRows])
    th = np.array([float(c) for c in am.const])
    for k in range(kq):
        th += np.array([float(c) for c in am.quadCols[k]]) * qa[k] / math.pi
    for k in range(n - 1):
        th += np.array([float(c) for c in am.epsCols[k]]) * epsKept[k] / math.pi
    th += np.array([float(c) for c in am.muCol]) * mu / math.pi
    th += np.array([float(c) for c in am.lamCol]) * lam / math.pi
    return _structure_from_theta(g, th * math.pi)


def parametrize(g: GluingData, quad: QuadSystem, s: AngleStructure) -> tuple[np.ndarray, np.ndarray, float, float]:
    """Inverse of :func:`solveAngles`: (kept quad angles, eps, mu, lambda)."""
    th = s.angles.reshape(g.n, 3)
    qa = np.array([th[i, quad.choice[i]] for i in quad.keptQuads])
    return qa, np.array(s.eps), s.mu, s.lam


def findStrictAngles(g: GluingData, mu: float = 0.0, lam: float = 0.0) -> AngleStructure | Infeasible:
    """Balanced angle structure maximizing the smallest angle, or Infeasible.

    Solves max t subject to the balanced edge equations, the holonomy
    constraints and every angle >= t, with the HiGHS dual simplex, which
    is deterministic for fixed input.
    """
    n = g.n
    nv = 3 * n + 1
    Aeq = []
    beq = []
    for i in range(n):
        r = np.zeros(nv)
        r[3 * i : 3 * i + 3] = 1
        Aeq.append(r)
        beq.append(math.pi)
    for row in g.edgeRows:
        Aeq.append(np.concatenate([np.array(row, dtype=float), [0.0]]))
        beq.append(2 * math.pi)
    Aeq.append(np.concatenate([np.array(g.meridian, dtype=float), [0.0]]))
    beq.append(mu)
    Aeq.append(np.concatenate([np.array(g.longitude, dtype=float), [0.0]]))
    beq.append(lam)
    Aub = np.hstack([-np.eye(3 * n), np.ones((3 * n, 1))])
    bub = np.zeros(3 * n)
    c = np.zeros(nv)
    c[-1] = -1.0
    bounds = [(None, None)] * (3 * n) + [(None, math.pi)]
    res = linprog(c, A_ub=Aub, b_ub=bub, A_eq=np.array(Aeq), b_eq=np.array(beq), bounds=bounds, method="highs-ds")
    if res.status == 2:
        return Infeasible(-math.inf, "the balanced equations with these holonomies have no solution")
    if res.status != 0:
        return Infeasible(-math.inf, f"linear program failed: {res.message}")
    margin = float(res.x[-1])
    if margin <= 1e-12:
        return Infeasible(margin, "the largest achievable minimum angle is not positive")
    return _structure_from_theta(g, res.x[:-1])


# ---------------------------------------------------------------------------
# balanced integrands


@dataclass(frozen=True)
class Factor:
    """One G_q factor: G_q((-q)^(c0 + cmu mu/pi + clam lambda/(2 pi)) y^monomial).

    ``epsCoeffs`` holds the coefficients of eps_j/pi (kept edges) in the
    exponent of -q before balancing.
    """

    prefactor: Triple
    monomial: tuple[int, ...]
    tet: int = -1
    role: str = ""
    epsCoeffs: tuple[Fraction, ...] = ()

    @property
    def isConstant(self) -> bool:
        return not any(self.monomial)

    def describe(self) -> str:
        c0, cm, cl = self.prefactor
        parts = []
        if c0:
            parts.append(f"(-q)^({c0})")
        if cm:
            parts.append(f"s^({cm})")
        if cl:
            parts.append(f"t^({cl})")
        for j, v in enumerate(self.monomial):
            if v:
                parts.append(f"y{j}^({v})")
        return "G(" + (" ".join(parts) or "1") + ")"

    def to_json_obj(self) -> dict:
        return {
            "prefactor": [str(x) for x in self.prefactor],
            "monomial": list(self.monomial),
            "tet": self.tet,
            "role": self.role,
        }


@dataclass(frozen=True)
class ContourSide:
    """Side annotation |y_j s^sExp t^tExp| = 1^(+/-), i.e. radius |q|^(-side*delta)."""

    side: int
    sExp: Fraction = Fraction(0)
    tExp: Fraction = Fraction(0)


@dataclass(frozen=True)
class BalancedIntegrand:
    """Integrand c(q)^cPower * prod G_q(...) on (C^*)^dim after balancing.

    ``factors`` carry a nonzero monomial; ``constPrefactors`` do not and
    sit outside the integral.  ``preRadii`` gives log_|q| |y_j| for the
    contour coming from a positive pre-angle structure (before balancing);
    ``sides`` optionally records 1^(+/-) annotations.
    """

    dim: int
    factors: tuple[Factor, ...]
    constPrefactors: tuple[Factor, ...]
    cPower: int
    preRadii: tuple[Fraction, ...] | None = None
    sides: tuple[ContourSide, ...] | None = None
    name: str = ""

    @property
    def allFactors(self) -> tuple[Factor, ...]:
        return self.factors + self.constPrefactors

    def describe(self) -> str:
        consts = " ".join(f.describe() for f in self.constPrefactors)
        body = " ".join(f.describe() for f in self.factors)
        return f"c^{self.cPower} {consts} * int[{self.dim}] {body}".replace("  ", " ")

    def to_json_obj(self) -> dict:
        return {
            "dim": self.dim,
            "cPower": self.cPower,
            "factors": [f.to_json_obj() for f in self.factors],
            "constPrefactors": [f.to_json_obj() for f in self.constPrefactors],
        }


def makeIntegrand(dim: int, factors: Sequence[Factor], cPower: int, **kw) -> BalancedIntegrand:
    """Split factors into integrated and constant ones; monomials are padded to ``dim``."""
    padded = []
    for f in factors:
        mon = tuple(f.monomial) + (0,) * (dim - len(f.monomial))
        if len(mon) != dim:
            raise MalformedInput(f"monomial {f.monomial} longer than dimension {dim}")
        padded.append(Factor(f.prefactor, mon, f.tet, f.role, f.epsCoeffs))
    factors = padded
    fs = tuple(f for f in factors if not f.isConstant)
    cs = tuple(f for f in factors if f.isConstant)
    return BalancedIntegrand(dim, fs, cs, cPower, **kw)


def monomialColumns(g: GluingData) -> list[tuple[int, ...]]:
    """Per factor (tet-major, roles alpha, beta, gamma), its exponent vector over the first n-1 edges."""
    A, B, C = g.matrices()
    out = []
    for i in range(g.n):
        for col in (C[:, i] - B[:, i], A[:, i] - C[:, i], B[:, i] - A[:, i]):
            out.append(tuple(int(v) for v in col[: g.n - 1]))
    return out


def _exact_solve(M: sp.Matrix, R: sp.Matrix) -> sp.Matrix:
    """Exact solution X of M X = R (M may be tall); SingularSystem if inconsistent or not unique."""
    if M.cols == 0:
        if any(v != 0 for v in R):
            raise SingularSystem("parameters do not cancel in a zero-dimensional integral")
        return sp.zeros(0, R.cols)
    if M.rank() < M.cols:
        raise SingularSystem("monomial matrix is rank deficient")
    MtM = M.T * M
    X = MtM.inv() * (M.T * R)
    if M * X != R:
        raise SingularSystem("angle parameters cannot be absorbed into the integration variables")
    return X


def compileIntegrand(g: GluingData, quad: QuadSystem | None = None) -> BalancedIntegrand:
    """Balanced integrand of the state integral.

    The angle map gives each of the 3n factors the exponent theta_k/pi.  The
    substitution x = (-q)^eta y with eta linear in the kept quad angles
    cancels those angles from every exponent; setting eps = 0 leaves
    prefactors in (1, mu/pi, lambda/(2 pi)).  The contour radii of a
    positive pre-angle structure (all angles pi/3) are recorded in
    ``preRadii``.
    """
    quad = quad or selectQuad(g)
    am = angleMap(g, quad)
    mons = monomialColumns(g)
    n, dim = g.n, g.n - 1
    M = sp.Matrix(3 * n, dim, lambda k, j: mons[k][j]) if dim else sp.zeros(3 * n, 0)
    kq = len(am.quadCols)
    TQ = sp.Matrix(3 * n, kq, lambda k, c: sp.Rational(am.quadCols[c][k].numerator, am.quadCols[c][k].denominator))
    H = _exact_solve(M, -TQ)  # eta = H (p/pi)
    factors = []
    for k in range(3 * n):
        pre = (am.const[k], am.muCol[k], 2 * am.lamCol[k])
        factors.append(
            Factor(
                pre,
                mons[k],
                tet=k // 3,
                role=ROLES[k % 3],
                epsCoeffs=tuple(am.epsCols[c][k] for c in range(n - 1)),
            )
        )
    # contour of the regular pre-angle structure: kept quad angles pi/3, so p/pi = 1/3
    third = sp.Matrix([sp.Rational(1, 3)] * kq)
    eta = H * third if dim else sp.zeros(0, 1)
    preRadii = tuple(-_frac(v) for v in eta)
    return makeIntegrand(dim, factors, n, preRadii=preRadii, name=g.name)


def verifyIntegrandInvariants(bi: BalancedIntegrand) -> list[str]:
    """Per-tetrahedron prefactor sums (1, 0, 0) and monomial sums 0; returns violations."""
    problems = []
    tets = sorted({f.tet for f in bi.allFactors if f.tet >= 0})
    for t in tets:
        fs = [f for f in bi.allFactors if f.tet == t]
        pre = tuple(sum((f.prefactor[i] for f in fs), Fraction(0)) for i in range(3))
        mon = tuple(sum(f.monomial[j] for f in fs) for j in range(bi.dim))
        if pre != (1, 0, 0):
            problems.append(f"tetrahedron {t}: prefactor sum {pre}")
        if any(mon):
            problems.append(f"tetrahedron {t}: monomial sum {mon}")
    if len(bi.allFactors) != 3 * bi.cPower:
        problems.append(f"factor count {len(bi.allFactors)} != 3 * {bi.cPower}")
    return problems


# ---------------------------------------------------------------------------
# singularity rays


@dataclass(frozen=True, order=True)
class QRay:
    """Shifted q-ray: e_mu^r e_lambda^s in (eps q^t)^sgn q^N, sgn the sign of s (of r if s = 0)."""

    r: int
    s: int
    t: Fraction
    eps: int

    def as_tuple(self) -> tuple:
        t = int(self.t) if self.t.denominator == 1 else self.t
        return (self.r, self.s, t, self.eps)


def _ray_from_condition(R: Fraction, S: Fraction, C: Fraction) -> QRay | None:
    """Ray for the condition s^R t^S in (-q)^C q^N (superset after clearing denominators)."""
    if R == 0 and S == 0:
        return None
    L = math.lcm(R.denominator, S.denominator, C.denominator)
    r, s_, c = int(R * L), int(S * L), C * L
    sgn = (1 if s_ > 0 else -1) if s_ != 0 else (1 if r > 0 else -1)
    # (-q)^c = (-1)^c q^c for integer c
    c = int(c)
    eps = -1 if c % 2 else 1
    return QRay(r, s_, Fraction(sgn * c), eps)


def singularityRays(bi: BalancedIntegrand) -> list[QRay]:
    """Shifted q-rays containing the singularities of the integral.

    Constant factors G(P) are singular when P in q^-N.  For a pair of
    factors with anti-parallel monomials a u and -b u (a, b > 0) the pole
    families pinch when P_1^b P_2^a lies in q^-N.
    """
    rays: set[QRay] = set()

    def add(pre: tuple[Fraction, Fraction, Fraction]) -> None:
        # P = (-q)^c0 s^cm t^cl in q^-N  <=>  s^-cm t^-cl in (-q)^c0 q^N
        ray = _ray_from_condition(-pre[1], -pre[2], pre[0])
        if ray is not None:
            rays.add(ray)

    for f in bi.constPrefactors:
        add(f.prefactor)
    fs = bi.factors
    for f1, f2 in itertools.combinations(fs, 2):
        m1, m2 = np.array(f1.monomial), np.array(f2.monomial)
        if np.dot(m1, m2) >= 0:
            continue
        g1 = math.gcd(*map(int, m1))
        g2 = math.gcd(*map(int, m2))
        if not np.array_equal(m1 // g1, -(m2 // g2)):
            continue
        a, b = g1, g2
        pre = tuple(b * x + a * y for x, y in zip(f1.prefactor, f2.prefactor))
        add(pre)
    return sorted(rays)


# ---------------------------------------------------------------------------
# matching integrands up to a monomial change of variables


@dataclass(frozen=True)
class VariableMap:
    """y_j = (-q)^(kappa_j[0]) s^(kappa_j[1]) t^(kappa_j[2]) prod_i Y_i^(U[j][i]).

    Maps the variables Y of a target integrand to the variables y of a
    source integrand.  ``matched`` counts factors that agree after the map.
    """

    U: tuple[tuple[int, ...], ...]
    kappa: tuple[Triple, ...]
    matched: int
    total: int

    @property
    def exact(self) -> bool:
        return self.matched == self.total


def _multiset_overlap(a: list, b: list) -> int:
    from collections import Counter

    ca, cb = Counter(a), Counter(b)
    return sum(min(ca[k], cb[k]) for k in ca)


def _independent_basis(mons: list[tuple[int, ...]], dim: int) -> list[int]:
    chosen: list[int] = []
    for k, m in enumerate(mons):
        trial = sp.Matrix([mons[i] for i in chosen] + [m])
        if trial.rank() == len(chosen) + 1:
            chosen.append(k)
        if len(chosen) == dim:
            break
    return chosen


def matchIntegrands(src: BalancedIntegrand, dst: BalancedIntegrand, maxTrials: int = 5000) -> VariableMap | None:
    """Best monomial change of variables taking ``src`` factors onto ``dst`` factors.

    The monomial part is found by sending a basis of source monomials to
    target monomials and keeping the unimodular maps that match the most
    monomials.  Prefactor shifts are then solved from every independent
    set of ``dim`` source factors paired with same-monomial targets, so a
    single mistyped factor cannot hide the map.  Each candidate is scored
    by the number of factors (constants included) it matches; the best
    one is returned, exact or not, or None when the shapes are incompatible.
    """
    if src.dim != dst.dim or len(src.allFactors) != len(dst.allFactors):
        return None
    dim = src.dim
    total = len(src.allFactors)
    dst_items = [(f.monomial, tuple(f.prefactor)) for f in dst.allFactors]
    src_const = [(tuple([0] * dim), tuple(f.prefactor)) for f in src.constPrefactors]
    if dim == 0:
        return VariableMap((), (), _multiset_overlap(src_const, dst_items), total)
    smons = [f.monomial for f in src.factors]
    basis = _independent_basis(smons, dim)
    if len(basis) < dim:
        return None
    Binv = sp.Matrix([smons[k] for k in basis]).inv()
    dmons = sorted({f.monomial for f in dst.factors})
    dst_mon_list = [f.monomial for f in dst.factors]

    Ws: list[tuple[int, list[list[int]]]] = []
    for targets in itertools.product(dmons, repeat=dim):
        W = Binv * sp.Matrix([list(t) for t in targets])
        if any(not v.is_integer for v in W) or abs(W.det()) != 1:
            continue
        Wi = [[int(W[i, j]) for j in range(dim)] for i in range(dim)]
        tm = [tuple(sum(m[i] * Wi[i][j] for i in range(dim)) for j in range(dim)) for m in smons]
        Ws.append((_multiset_overlap(tm, dst_mon_list), Wi))
    if not Ws:
        return None
    top = max(w[0] for w in Ws)
    best: VariableMap | None = None
    trials = 0
    for _, Wi in (w for w in Ws if w[0] == top):

        def tmon(m, Wi=Wi):
            return tuple(sum(m[i] * Wi[i][j] for i in range(dim)) for j in range(dim))

        for subset in itertools.combinations(range(len(smons)), dim):
            Ms = sp.Matrix([smons[k] for k in subset])
            if Ms.det() == 0:
                continue
            Msi = Ms.inv()
            partners = [sorted({p for mm, p in dst_items if mm == tmon(smons[k])}) for k in subset]
            for choice in itertools.product(*partners):
                trials += 1
                if trials > maxTrials:
                    return best
                D = sp.Matrix(
                    [[sp.Rational(*(_pair(p[c] - src.factors[k].prefactor[c]))) for c in range(3)] for k, p in zip(subset, choice)]
                )
                K = Msi * D
                kappa = tuple(tuple(_frac(K[j, c]) for c in range(3)) for j in range(dim))
                mapped = [
                    (tmon(f.monomial), tuple(f.prefactor[c] + sum(f.monomial[j] * kappa[j][c] for j in range(dim)) for c in range(3)))
                    for f in src.factors
                ] + src_const
                score = _multiset_overlap(mapped, dst_items)
                if best is None or score > best.matched:
                    best = VariableMap(tuple(tuple(r) for r in Wi), kappa, score, total)
                    if score == total:
                        return best
    return best


def _pair(x: Fraction) -> tuple[int, int]:
    return x.numerator, x.denominator


def mapFactors(src: BalancedIntegrand, vm: VariableMap) -> list[tuple[tuple[int, ...], Triple]]:
    """Source factors rewritten in the target variables (constants last)."""
    dim = src.dim
    out = []
    for f in src.factors:
        mon = tuple(sum(f.monomial[i] * vm.U[i][j] for i in range(dim)) for j in range(dim))
        pre = tuple(f.prefactor[c] + sum(f.monomial[j] * vm.kappa[j][c] for j in range(dim)) for c in range(3))
        out.append((mon, pre))
    out += [(tuple([0] * dim), tuple(f.prefactor)) for f in src.constPrefactors]
    return out
