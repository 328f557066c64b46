"""3D-index coefficients as lattice sums of tetrahedron indices, and as
Fourier coefficients of the state integral on the unit torus.

Both sides are series in q: the lattice side is exact with integer
coefficients, the Fourier side is a number at a fixed q.  Agreement of the
two at a numeric q is the main consistency check of the package.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import lcm
from typing import Sequence

import numpy as np

from .errors import AmbiguousConvention, InconsistentData, NonConvergent, NoStrictAngles
from .integrator import ContourSpec, Peripheral, defaultContour, evalIntegral
from .nzdata import GluingData, Infeasible, angleMap, compileIntegrand, findStrictAngles, reducedAB, selectQuad
from .qseries import HalfExpSeries, hatValuationBound, iDeltaHat, series_sum, tetIndexSeries, tetValuationBound
from .specialfn import QContext

CONVENTIONS = ("once-per-point", "per-tetrahedron", "derived-holonomy")
DEFAULT_CONVENTION = "derived-holonomy"
DEFAULT_SHELL_CAP = 40


# ---------------------------------------------------------------------------
# lattice data


@dataclass(frozen=True)
class LatticeData:
    """Integer data of the lattice sum for one gluing.

    ``aT`` and ``bT`` hold the columns a_i, b_i of (A'|B') as rows: the
    kept edge rows, then the meridian, then the half longitude.  The
    summand for k' = (c, m, e) is built from a_i . k' and b_i . k'.
    ``edgeShift`` and ``periShift`` are the (-q) exponents picked up from
    the sign terms of the eliminated shape.
    """

    n: int
    aT: tuple[tuple[Fraction, ...], ...]
    bT: tuple[tuple[Fraction, ...], ...]
    edgeShift: tuple[int, ...]
    periShift: tuple[Fraction, Fraction]


def latticeData(g: GluingData) -> LatticeData:
    n = g.n
    A, B, _ = reducedAB(g)
    Abar, Bbar, _ = g.matrices()
    kept = list(range(n - 1))  # the edge rows sum to a dependent row

    def split(row):
        r = np.array(row, dtype=int).reshape(n, 3)
        return r[:, 0], r[:, 1], r[:, 2]

    nm, nm1, nm2 = split(g.meridian)
    nl, nl1, nl2 = split(g.longitude)
    Ap = [[Fraction(int(A[r][i])) for i in range(n)] for r in kept]
    Bp = [[Fraction(int(B[r][i])) for i in range(n)] for r in kept]
    Ap.append([Fraction(int(nm[i] - nm1[i])) for i in range(n)])
    Bp.append([Fraction(int(nm2[i] - nm1[i])) for i in range(n)])
    Ap.append([Fraction(int(nl[i] - nl1[i]), 2) for i in range(n)])
    Bp.append([Fraction(int(nl2[i] - nl1[i]), 2) for i in range(n)])
    aT = tuple(tuple(Ap[r][i] for r in range(n + 1)) for i in range(n))
    bT = tuple(tuple(Bp[r][i] for r in range(n + 1)) for i in range(n))
    edgeShift = tuple(int(2 - Bbar[r].sum()) for r in kept)
    periShift = (Fraction(-int(nm1.sum())), Fraction(-int(nl1.sum()), 2))
    return LatticeData(n, aT, bT, edgeShift, periShift)


def _dot(v: Sequence[Fraction], k: Sequence[int]) -> Fraction:
    return sum((a * b for a, b in zip(v, k)), Fraction(0))


def _as_int(x: Fraction, what: str) -> int:
    if x.denominator != 1:
        raise InconsistentData(f"{what} is not an integer ({x}); the peripheral data do not give an integral lattice")
    return int(x)


@dataclass(frozen=True)
class LatticePoint:
    """Tetrahedron arguments and the (-q) exponent of one summand."""

    args: tuple[tuple[int, int], ...]  # (-b_i . k', a_i . k')
    shift: Fraction  # exponent of (-q) in front of the product
    hatted: bool  # True: product of I^Delta; False: product of I_Delta(q^2)


def _point(ld: LatticeData, c: Sequence[int], m: int, e: int, convention: str) -> LatticePoint:
    kp = list(c) + [m, e]
    args = tuple(
        (_as_int(-_dot(ld.bT[i], kp), "b.k'"), _as_int(_dot(ld.aT[i], kp), "a.k'")) for i in range(ld.n)
    )
    if convention == "derived-holonomy":
        shift = sum((Fraction(s * ci) for s, ci in zip(ld.edgeShift, c)), Fraction(0))
        shift += m * ld.periShift[0] + e * ld.periShift[1]
        return LatticePoint(args, shift, True)
    # literal reading: v = (1, ..., 1, m, e) paired with k' = (c, m, e)
    vk = Fraction(sum(c) + m * m + e * e)
    if convention == "once-per-point":
        return LatticePoint(args, vk, False)
    if convention == "per-tetrahedron":
        return LatticePoint(args, ld.n * vk, False)
    raise ValueError(f"unknown convention {convention!r}")


def _column_reduce(M: list[list[int]]) -> tuple[list[list[int]], list[list[int]]]:
    """Unimodular U with M U in column echelon form; returns (M U, U)."""
    rows = len(M)
    cols = len(M[0]) if rows else 0
    H = [list(r) for r in M]
    U = [[int(i == j) for j in range(cols)] for i in range(cols)]

    def colop(j, k, f):  # column j -= f * column k
        for r in H:
            r[j] -= f * r[k]
        for r in U:
            r[j] -= f * r[k]

    def swap(j, k):
        for r in H:
            r[j], r[k] = r[k], r[j]
        for r in U:
            r[j], r[k] = r[k], r[j]

    p = 0
    for i in range(rows):
        if p >= cols:
            break
        while True:
            nz = [j for j in range(p, cols) if H[i][j] != 0]
            if not nz:
                break
            k = min(nz, key=lambda j: abs(H[i][j]))
            swap(p, k)
            done = True
            for j in range(p + 1, cols):
                if H[i][j]:
                    colop(j, p, H[i][j] // H[i][p])
                    done = done and H[i][j] == 0
            if done:
                break
        if any(H[i][j] for j in range(p, cols)):
            p += 1
    return H, U


@dataclass(frozen=True)
class HolonomyLattice:
    """Integer points (r, s) of the tetrahedron-index products surviving the torus integral.

    ``basis`` spans the (r, s) with A s - B (r + s) = 0 on every edge.  The
    linear functionals ``mF``, ``eF`` and ``cF`` give, for such a point, the
    power of s and of t it contributes to and its extra (-q) exponent;
    they are read off the angle parametrization and do not depend on the
    free angles there.
    """

    n: int
    basis: tuple[tuple[int, ...], ...]  # columns, each of length 2n: (r, s)
    mF: tuple[Fraction, ...]
    eF: tuple[Fraction, ...]
    cF: tuple[Fraction, ...]
    scale: int
    echelon: tuple[tuple[int, ...], ...]
    transform: tuple[tuple[int, ...], ...]
    rank: int

    def fiber(self, m: Fraction, e: Fraction):
        """Base point and generators of the (r, s) with holonomy powers (m, e), or None."""
        tm, te = Fraction(m) * self.scale, Fraction(e) * self.scale
        if tm.denominator != 1 or te.denominator != 1:
            return None
        target = [int(tm), int(te)]
        H = self.echelon
        y: list[int] = []
        for i in range(2):
            acc = target[i] - sum(H[i][j] * y[j] for j in range(len(y)))
            if len(y) < self.rank and H[i][len(y)] != 0:
                piv = H[i][len(y)]
                if acc % piv:
                    return None
                y.append(acc // piv)
            elif acc != 0:
                return None
        dimB = len(self.basis)
        V = self.transform
        coords = [sum(V[a][j] * y[j] for j in range(self.rank)) for a in range(dimB)]
        base = tuple(sum(self.basis[a][x] * coords[a] for a in range(dimB)) for x in range(2 * self.n))
        gens = []
        for j in range(self.rank, dimB):
            gens.append(tuple(sum(self.basis[a][x] * V[a][j] for a in range(dimB)) for x in range(2 * self.n)))
        return base, gens

    def exponent(self, v: Sequence[int]) -> Fraction:
        return sum((c * x for c, x in zip(self.cF, v)), Fraction(0))


@lru_cache(maxsize=64)
def _holonomy_lattice_cached(key: str) -> HolonomyLattice:
    obj = json.loads(key)
    from .nzdata import gluingFromRows

    return _build_holonomy_lattice(gluingFromRows(obj["n"], obj["rows"]))


def holonomyLattice(g: GluingData) -> HolonomyLattice:
    return _holonomy_lattice_cached(json.dumps(g.to_json_obj(), sort_keys=True))


def _build_holonomy_lattice(g: GluingData) -> HolonomyLattice:
    n = g.n
    A, B, _ = reducedAB(g)
    # constraint on (r, s): -B r + (A - B) s = 0
    M = [[-int(B[E][i]) for i in range(n)] + [int(A[E][i] - B[E][i]) for i in range(n)] for E in range(n)]
    Hm, U = _column_reduce(M)
    kernel = [j for j in range(2 * n) if all(Hm[i][j] == 0 for i in range(n))]
    basis = tuple(tuple(U[x][j] for x in range(2 * n)) for j in kernel)
    am = angleMap(g, selectQuad(g))

    def functional(col: Sequence[Fraction]) -> list[Fraction]:
        # exponent -(sum (alpha+gamma) s + alpha r) in units of pi
        a = [col[3 * i] for i in range(n)]
        c = [col[3 * i + 2] for i in range(n)]
        return [-a[i] for i in range(n)] + [-(a[i] + c[i]) for i in range(n)]

    def on_basis(f):
        return [sum((f[x] * b[x] for x in range(2 * n)), Fraction(0)) for b in basis]

    for col in am.quadCols:
        if any(on_basis(functional(col))):
            raise InconsistentData("tetrahedron-index exponents depend on the free angles")
    mF = tuple(functional(am.muCol))
    eF = tuple(2 * x for x in functional(am.lamCol))
    cF = tuple(functional(am.const))
    Lm, Le = on_basis(mF), on_basis(eF)
    scale = lcm(*[x.denominator for x in Lm + Le]) if basis else 1
    L = [[int(x * scale) for x in Lm], [int(x * scale) for x in Le]]
    H, V = _column_reduce(L)
    rank = sum(1 for j in range(len(basis)) if H[0][j] or H[1][j])
    return HolonomyLattice(
        n, basis, mF, eF, cF, scale, tuple(tuple(r) for r in H), tuple(tuple(r) for r in V), rank
    )


def _holonomy_point(hl: HolonomyLattice, base, gens, k: Sequence[int]) -> LatticePoint:
    v = [base[x] + sum(gk * g[x] for gk, g in zip(k, gens)) for x in range(2 * hl.n)]
    args = tuple((v[i], v[hl.n + i]) for i in range(hl.n))
    return LatticePoint(args, hl.exponent(v), True)


def _bound_halfunits(pt: LatticePoint) -> Fraction:
    """Lower bound on the valuation of a summand, in half-units of q."""
    if pt.hatted:
        b = sum((hatValuationBound(r, s) for r, s in pt.args), Fraction(0))
    else:
        b = sum((2 * tetValuationBound(r, s) for r, s in pt.args), Fraction(0))
    return 2 * (b + pt.shift)


def _summand(pt: LatticePoint, order: int) -> HalfExpSeries:
    shift2 = 2 * pt.shift
    if shift2.denominator != 1 or int(shift2) % 2:
        raise InconsistentData(f"prefactor exponent {pt.shift} is not an integer")
    sh = int(shift2)
    bounds = [hatValuationBound(r, s) if pt.hatted else 2 * tetValuationBound(r, s) for r, s in pt.args]
    total = 2 * sum(bounds, Fraction(0))
    target = order - sh
    acc: dict[int, int] = {0: 1}
    rest = total
    for (r, s), b in zip(pt.args, bounds):
        # factor i is needed to the target minus the others' least valuation
        need = max(1, target - int(math.floor(total - 2 * b)))
        if pt.hatted:
            f = iDeltaHat(r, s, need)
        else:
            f = tetIndexSeries(r, s, max(1, -(-need // 2))).double()
        rest -= 2 * b
        acc = _product(acc, f.coeffs, target - int(math.floor(rest)))
    out = HalfExpSeries({k + sh: v for k, v in acc.items()}, order)
    if (sh // 2) % 2:
        out = -out
    return out


def _product(a: dict[int, int], b: dict[int, int], limit: int) -> dict[int, int]:
    """Product of two coefficient maps, dropping exponents at or above ``limit``."""
    out: dict[int, int] = {}
    bi = sorted(b.items())
    for ka, va in a.items():
        for kb, vb in bi:
            k = ka + kb
            if k >= limit:
                break
            out[k] = out.get(k, 0) + va * vb
    return out


def _shell(radius: int, dim: int):
    """Integer points of l-infinity norm exactly ``radius`` in Z^dim."""
    if dim == 0:
        if radius == 0:
            yield ()
        return
    if radius == 0:
        yield (0,) * dim
        return
    for p in itertools.product(range(-radius, radius + 1), repeat=dim):
        if max(abs(x) for x in p) == radius:
            yield p


@dataclass
class LatticeResult:
    m: int
    e: int
    series: HalfExpSeries
    convention: str
    shells: int
    terms: int

    def to_json_obj(self) -> dict:
        return {
            "m": self.m,
            "e": self.e,
            "series": self.series.to_json_obj(),
            "convention": self.convention,
            "shells": self.shells,
        }


def _require_strict_angles(g: GluingData) -> None:
    sol = findStrictAngles(g)
    if isinstance(sol, Infeasible):
        raise NoStrictAngles(f"{g.name or 'triangulation'} has no strict angle structure: {sol.reason}")


def latticeIndex(
    g: GluingData,
    m: int,
    e: int,
    order: int,
    convention: str = DEFAULT_CONVENTION,
    shellCap: int = DEFAULT_SHELL_CAP,
    checkAngles: bool = True,
) -> LatticeResult:
    """Coefficient of s^m t^e of the index, as a q-series below half-unit ``order``.

    Sums the tetrahedron-index products over a rank n-1 lattice by growing
    l-infinity shells.  Two consecutive shells all of whose points have
    valuation bound at least ``order`` end the sum; the bound is convex
    along the lattice, so later shells contribute nothing either.  Raises
    NonConvergent when ``shellCap`` shells do not reach that state.
    ``m`` and ``e`` may be halves when the integrand involves s^(1/2).
    """
    if order <= 0:
        raise ValueError("order must be positive")
    if checkAngles:
        _require_strict_angles(g)
    if convention == "derived-holonomy":
        hl = holonomyLattice(g)
        fib = hl.fiber(Fraction(m), Fraction(e))
        if fib is None:
            return LatticeResult(m, e, HalfExpSeries.zero(order), convention, 0, 0)
        base, gens = fib
        dim = len(gens)
        make = lambda k: _holonomy_point(hl, base, gens, k)
    else:
        ld = latticeData(g)
        dim = g.n - 1
        make = lambda k: _point(ld, k, m, e, convention)
    parts: list[HalfExpSeries] = []
    terms = 0
    dead = 0
    for radius in range(shellCap + 1):
        live = False
        for k in _shell(radius, dim):
            pt = make(k)
            if _bound_halfunits(pt) >= order:
                continue
            live = True
            terms += 1
            parts.append(_summand(pt, order))
        if dim == 0:
            return LatticeResult(m, e, series_sum(parts, order), convention, 1, terms)
        dead = 0 if live else dead + 1
        # two empty shells in a row guard against a dip of the bound between shells
        if dead >= 2:
            return LatticeResult(m, e, series_sum(parts, order), convention, radius + 1, terms)
    raise NonConvergent(
        f"lattice sum for (m,e)=({m},{e}) still has terms below q^{Fraction(order, 2)} after {shellCap} shells;"
        " the triangulation is not suited to the index (expected when it is not 1-efficient)"
    )


# ---------------------------------------------------------------------------
# Fourier side


@dataclass(frozen=True)
class IndexSeries:
    """Index coefficients keyed by (m, e)."""

    entries: dict
    order: int
    provenance: str
    convention: str = ""

    def to_json_obj(self) -> dict:
        return {
            "order": self.order,
            "provenance": self.provenance,
            "convention": self.convention,
            "entries": [
                {"m": m, "e": e, "series": s.to_json_obj()} for (m, e), s in sorted(self.entries.items())
            ],
        }


def latticeIndexTable(g: GluingData, mmax: int, emax: int, order: int, convention: str = DEFAULT_CONVENTION, shellCap: int = DEFAULT_SHELL_CAP) -> IndexSeries:
    _require_strict_angles(g)
    ent = {}
    for m in range(-mmax, mmax + 1):
        for e in range(-emax, emax + 1):
            ent[(m, e)] = latticeIndex(g, m, e, order, convention, shellCap, checkAngles=False).series
    return IndexSeries(ent, order, "lattice-sum", convention)


def peripheralRoots(bi) -> tuple[int, int]:
    """Smallest (ds, dt) with the integrand a function of s^(1/ds), t^(1/dt)."""
    ds = dt = 1
    for f in bi.allFactors:
        ds = lcm(ds, Fraction(f.prefactor[1]).denominator)
        dt = lcm(dt, Fraction(f.prefactor[2]).denominator)
    return ds, dt


@dataclass
class FourierGrid:
    """Integral values on a grid of (s^(1/ds), t^(1/dt)) roots of unity."""

    values: np.ndarray
    ds: int
    dt: int
    gridSize: int
    contour: ContourSpec
    maxErr: float

    def coefficient(self, m: int, e: int) -> complex:
        """Coefficient of s^m t^e; s = sigma^ds, so it sits at sigma^(ds m)."""
        N = self.gridSize
        k = np.arange(N)
        ws = np.exp(-2j * np.pi * self.ds * m * k / N)
        wt = np.exp(-2j * np.pi * self.dt * e * k / N)
        return complex(ws @ self.values @ wt) / (N * N)

    def oddPart(self) -> float:
        """Largest Fourier mass at fractional powers of s or t (should vanish)."""
        F = np.fft.fft2(self.values) / self.values.size
        N = self.gridSize
        idx = np.fft.fftfreq(N, 1 / N).astype(int)
        mask = (idx[:, None] % self.ds != 0) | (idx[None, :] % self.dt != 0)
        return float(np.abs(F[mask]).max()) if mask.any() else 0.0


_GRID_CACHE: dict = {}


def _grid_key(g: GluingData, qval: complex, gridSize: int, tol: float):
    return (json.dumps(g.to_json_obj(), sort_keys=True), complex(qval), gridSize, tol)


def fourierGrid(g: GluingData, qval: complex, gridSize: int, tol: float = 1e-12, threads: int | None = None, cache: bool = True) -> FourierGrid:
    """State integral at the grid points; cached on (gluing, q, grid, tol)."""
    key = _grid_key(g, qval, gridSize, tol)
    if cache and key in _GRID_CACHE:
        return _GRID_CACHE[key]
    _require_strict_angles(g)
    ctx = QContext(qval)
    bi = compileIntegrand(g)
    ds, dt = peripheralRoots(bi)
    N = gridSize
    vals = np.zeros((N, N), dtype=complex)
    contour = defaultContour(bi, ctx, 1.0, 1.0)
    worst = 0.0
    for i in range(N):
        for j in range(N):
            # s = sigma^ds with sigma = exp(2 pi i i/N); log s fixed by sigma
            per = Peripheral(ds * 2j * math.pi * i / N / ctx.h, dt * 2j * math.pi * j / N / ctx.h)
            r = evalIntegral(bi, ctx, per, None, contour=contour, tol=tol, threads=threads)
            vals[i, j] = r.value
            worst = max(worst, r.estErr)
    out = FourierGrid(vals, ds, dt, N, contour, worst)
    if cache:
        _GRID_CACHE[key] = out
    return out


def fourierIndex(g: GluingData, qval: complex, m: int, e: int, gridSize: int = 32, tol: float = 1e-12, threads: int | None = None) -> complex:
    """Coefficient of s^m t^e of the state integral at q = qval by torus quadrature."""
    return fourierGrid(g, qval, gridSize, tol, threads).coefficient(m, e)


def clearFourierCache() -> None:
    _GRID_CACHE.clear()


# ---------------------------------------------------------------------------
# conventions


@dataclass
class ConventionReport:
    convention: str
    errors: dict = field(default_factory=dict)  # convention -> max rel err over probes
    matching: list = field(default_factory=list)

    def to_json_obj(self) -> dict:
        return {"convention": self.convention, "errors": self.errors, "matching": self.matching}


PROBES = ((0, 0), (1, 0), (0, 1))


def resolvePrefactorConvention(
    g: GluingData, qval: complex = 0.1, order: int = 40, gridSize: int = 32, tol: float = 1e-5, probes=PROBES
) -> ConventionReport:
    """Pick the prefactor placement whose lattice sums match the Fourier oracle.

    Candidates are tried in the order of CONVENTIONS and the first one
    matching on every probe is returned, so when several agree the
    once-per-point reading wins.
    """
    grid = fourierGrid(g, qval, gridSize)
    rep = ConventionReport("")
    for conv in CONVENTIONS:
        worst = 0.0
        for m, e in probes:
            try:
                val = latticeIndex(g, m, e, order, conv).series.evaluate(qval)
            except InconsistentData:
                worst = math.inf
                break
            ref = grid.coefficient(m, e)
            worst = max(worst, abs(val - ref) / (1 + abs(ref)))
        rep.errors[conv] = worst
        if worst < tol:
            rep.matching.append(conv)
    if not rep.matching:
        raise AmbiguousConvention(
            "no prefactor convention matches the Fourier coefficients: "
            + ", ".join(f"{c}: {v:.2e}" for c, v in rep.errors.items())
        )
    rep.convention = rep.matching[0]
    return rep


# ---------------------------------------------------------------------------
# cross-validation of the two sides


@dataclass
class CrossValidation:
    name: str
    qval: complex
    gridSize: int
    order: int
    convention: str
    maxErr: float  # max |fourier - lattice| / (1 + |fourier|)
    maxRelErr: float  # max |fourier - lattice| / |fourier| over entries above 1e-12
    rows: list = field(default_factory=list)

    def passed(self, tol: float = 1e-6) -> bool:
        return self.maxErr < tol

    def to_json_obj(self) -> dict:
        return {
            "name": self.name,
            "q": {"re": complex(self.qval).real, "im": complex(self.qval).imag},
            "grid": self.gridSize,
            "order": self.order,
            "convention": self.convention,
            "maxErr": float(f"{self.maxErr:.6g}"),
            "maxRelErr": float(f"{self.maxRelErr:.6g}"),
            "entries": self.rows,
        }


def crossValidate(
    g: GluingData,
    qval: complex = 0.1,
    bound: int = 2,
    gridSize: int = 32,
    order: int = 48,
    convention: str = DEFAULT_CONVENTION,
    threads: int | None = None,
) -> CrossValidation:
    """Lattice sums evaluated at ``qval`` against Fourier coefficients for |m|, |e| <= bound."""
    grid = fourierGrid(g, qval, gridSize, threads=threads)
    out = CrossValidation(g.name, qval, gridSize, order, convention, 0.0, 0.0)
    for m in range(-bound, bound + 1):
        for e in range(-bound, bound + 1):
            lat = latticeIndex(g, m, e, order, convention).series.evaluate(qval)
            f = grid.coefficient(m, e)
            d = abs(lat - f)
            out.maxErr = max(out.maxErr, d / (1 + abs(f)))
            if abs(f) > 1e-12:
                out.maxRelErr = max(out.maxRelErr, d / abs(f))
            out.rows.append({"m": m, "e": e, "lattice": float(f"{complex(lat).real:.15g}"), "fourier": float(f"{f.real:.15g}"), "absErr": float(f"{d:.3g}")})
    return out
