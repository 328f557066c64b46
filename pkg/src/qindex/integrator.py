"""Numerical state integrals over product-torus contours.

Moduli are tracked on a logarithmic scale: a complex number u is
described by its exponent ``log|u| / log|q|``, so that |u| = |q|^exponent.
A factor G_q(P y^M) then has exponent ``rho + M . x`` on the torus
|y_j| = |q|^(x_j), and its poles q^(-N) sit at exponents 0, -1, -2, ...
"""

from __future__ import annotations

import cmath
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import MalformedInput, NoConvergence, PinchDetected, PoleProximity
from .nzdata import BalancedIntegrand, ContourSide, Factor, VariableMap, matchIntegrands
from .specialfn import QContext, cValue, gq, powNegQ

DEFAULT_DELTA = 0.05
_DELTA_MAX = 0.25
_BLOCK_POINTS = 8192


def defaultThreads() -> int:
    try:
        return max(1, int(os.environ.get("QINDEX_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# evaluation of integrands


@dataclass(frozen=True)
class Peripheral:
    """Logarithmic coordinates (a, b) with s = (-q)^a and t = (-q)^b."""

    a: complex
    b: complex

    @classmethod
    def from_st(cls, ctx: QContext, s, t) -> "Peripheral":
        """From values s, t (principal logarithms); a Peripheral passed as s is returned as is."""
        if isinstance(s, Peripheral):
            return s
        if s == 0 or t == 0:
            raise MalformedInput("peripheral parameters must be nonzero")
        return cls(cmath.log(s) / ctx.h, cmath.log(t) / ctx.h)

    def exponent(self, pre: Sequence[Fraction], eps: Sequence[Fraction] = (), epsVals: Sequence[float] = ()) -> complex:
        c0, cm, cl = pre
        e = float(c0) + float(cm) * self.a + float(cl) * self.b
        for c, v in zip(eps, epsVals):
            e += float(c) * v
        return e


def _mod_exponent(ctx: QContext, e: complex) -> float:
    """log_|q| |(-q)^e|."""
    return (e * ctx.h).real / math.log(ctx.absq)


@dataclass
class CompiledFactors:
    """Numeric prefactors and monomials of the integrated factors."""

    P: np.ndarray  # complex prefactor values
    rho: np.ndarray  # modulus exponents of the prefactors
    M: np.ndarray  # integer monomials, shape (k, dim)
    constValue: complex


def compileFactors(bi: BalancedIntegrand, ctx: QContext, s: complex, t: complex, epsVals: Sequence[float] = ()) -> CompiledFactors:
    per = Peripheral.from_st(ctx, s, t)
    ex = [per.exponent(f.prefactor, f.epsCoeffs, epsVals) for f in bi.factors]
    P = np.array([powNegQ(ctx, e) for e in ex], dtype=complex)
    rho = np.array([_mod_exponent(ctx, e) for e in ex])
    M = np.array([f.monomial for f in bi.factors], dtype=int).reshape(len(bi.factors), bi.dim)
    const = complex(cValue(ctx)) ** bi.cPower
    for f in bi.constPrefactors:
        const *= complex(gq(ctx, powNegQ(ctx, per.exponent(f.prefactor, f.epsCoeffs, epsVals))))
    return CompiledFactors(P, rho, M, const)


def integrandValues(cf: CompiledFactors, ctx: QContext, Y: np.ndarray) -> np.ndarray:
    """Integrand (constants included) at points Y of shape (dim, ...)."""
    out = np.full(Y.shape[1:], cf.constValue, dtype=complex)
    for P, mon in zip(cf.P, cf.M):
        arg = np.full(Y.shape[1:], P, dtype=complex)
        for j, m in enumerate(mon):
            if m:
                arg = arg * Y[j] ** int(m)
        out = out * gq(ctx, arg, check=False)
    return out


def integrandFunction(bi: BalancedIntegrand, ctx: QContext, s: complex, t: complex) -> Callable[[np.ndarray], np.ndarray]:
    cf = compileFactors(bi, ctx, s, t)
    return lambda Y: integrandValues(cf, ctx, np.asarray(Y, dtype=complex))


# ---------------------------------------------------------------------------
# contours


@dataclass(frozen=True)
class ContourSpec:
    """Product torus |y_j| = radii[j]."""

    radii: tuple[float, ...]
    guardband: float = 1e-8
    maxGrid: int = 1024
    source: str = ""

    def __post_init__(self) -> None:
        if any(not (r > 0) for r in self.radii):
            raise MalformedInput("contour radii must be positive")
        if not (0 < self.guardband < 0.5):
            raise MalformedInput("guardband must lie in (0, 0.5)")

    def to_json_obj(self) -> dict:
        return {"radii": list(self.radii), "guardband": self.guardband, "maxGrid": self.maxGrid, "source": self.source}


def clearance(cf: CompiledFactors, ctx: QContext, x: np.ndarray) -> float:
    """Smallest distance, in log-modulus, from a factor's modulus on the torus to a pole level.

    Constant moduli on a product torus make this exact: the pole set of
    G(P y^M) meets the torus only if rho + M.x is a non-positive integer.
    """
    if len(cf.rho) == 0:
        return math.inf
    e = cf.rho + cf.M @ x
    lq = -math.log(ctx.absq)
    d = np.where(e > 0, e, np.abs(e - np.round(e)))
    return float(d.min() * lq)


def chamberLP(cf: CompiledFactors) -> tuple[float, np.ndarray]:
    """Maximize min_k (rho_k + M_k . x): every factor strictly inside its convergence disk."""
    k, dim = cf.M.shape
    if k == 0 or dim == 0:
        return math.inf, np.zeros(dim)
    # variables x (dim), tau; minimize -tau subject to tau - M x <= rho
    A = np.hstack([-cf.M.astype(float), np.ones((k, 1))])
    b = cf.rho
    c = np.zeros(dim + 1)
    c[-1] = -1.0
    bounds = [(-20, 20)] * dim + [(None, 1.0)]
    res = linprog(c, A_ub=A, b_ub=b, bounds=bounds, method="highs-ds")
    if res.status != 0:
        return -math.inf, np.zeros(dim)
    return float(res.x[-1]), res.x[:-1]


def _pole_points(P: complex, m: int, ctx: QContext, levels: int) -> np.ndarray:
    """Solutions y of P y^m = q^(-k), k < levels (all m-th roots)."""
    pts = []
    for k in range(levels):
        target = ctx.q ** (-k) / P
        r = abs(target) ** (1.0 / abs(m))
        th = cmath.phase(target)
        for j in range(abs(m)):
            ang = (th + 2 * math.pi * j) / abs(m)
            pts.append(cmath.rect(r, ang) if m > 0 else 1 / cmath.rect(r, ang))
    return np.array(pts)


def pinchCheck(cf: CompiledFactors, ctx: QContext, guardband: float, levels: int = 4) -> str | None:
    """Describe a pinch between factors with anti-parallel monomials, or None.

    In each such pair one family of poles accumulates at 0 and the other at
    infinity along the common direction; a coincidence of actual poles
    cannot be avoided by any contour.
    """
    k = len(cf.P)
    for i in range(k):
        for j in range(i + 1, k):
            mi, mj = cf.M[i], cf.M[j]
            if mi @ mj >= 0:
                continue
            gi, gj = math.gcd(*map(int, mi)), math.gcd(*map(int, mj))
            if not np.array_equal(mi // gi, -(mj // gj)):
                continue
            # project onto the common primitive direction
            pi_ = _pole_points(cf.P[i], gi, ctx, levels)
            pj = _pole_points(cf.P[j], -gj, ctx, levels)
            d = np.abs(pi_[:, None] - pj[None, :]) / np.maximum(np.abs(pj[None, :]), 1e-300)
            if d.size and d.min() < guardband:
                return f"factors {i} and {j} have coinciding poles (relative distance {d.min():.2e})"
    return None


def _delta_candidates(delta: float, depth: int = 10):
    yield delta
    lo, hi = 0.0, _DELTA_MAX
    queue = [(lo, hi)]
    for _ in range(depth):
        nxt = []
        for a, b in queue:
            mid = 0.5 * (a + b)
            if mid != delta:
                yield mid
            nxt += [(a, mid), (mid, b)]
        queue = nxt


def _side_exponents(bi: BalancedIntegrand, ctx: QContext, s: complex, t: complex) -> tuple[np.ndarray, np.ndarray, str]:
    """Sides (+1 outside, -1 inside the unit circle) and offsets from s, t in the annotations."""
    per = Peripheral.from_st(ctx, s, t)
    rs = _mod_exponent(ctx, per.a)
    rt = _mod_exponent(ctx, per.b)
    if bi.sides is not None:
        sides = np.array([c.side for c in bi.sides], dtype=float)
        off = np.array([float(c.sExp) * rs + float(c.tExp) * rt for c in bi.sides])
        return sides, off, "annotated sides"
    if bi.preRadii is not None:
        sides = np.array([-1.0 if r > 0 else 1.0 for r in bi.preRadii])
        return sides, np.zeros(bi.dim), "sides of a positive pre-angle structure"
    return np.ones(bi.dim), np.zeros(bi.dim), "default outer sides"


def defaultContour(
    bi: BalancedIntegrand,
    ctx: QContext,
    s: complex = 1.0,
    t: complex = 1.0,
    delta: float = DEFAULT_DELTA,
    guardband: float | None = None,
    maxGrid: int = 1024,
    preferSides: bool = False,
) -> ContourSpec:
    """Contour for the balanced integral at (s, t).

    When some torus puts every factor strictly inside its disk of
    convergence (the balanced chamber is open) its most central point is
    used.  Otherwise the integral is taken on the 1^(+/-) sides of the
    unit circle, radius |q|^(-side*delta), with delta bisected inside
    (0, 0.25) until the poles are cleared; coinciding pole families raise
    PinchDetected.
    """
    gb = ctx.guardband if guardband is None else guardband
    cf = compileFactors(bi, ctx, s, t)
    if bi.dim == 0:
        return ContourSpec((), gb, maxGrid, "no integration")
    lq = -math.log(ctx.absq)
    if not preferSides or bi.sides is None:
        tau, x = chamberLP(cf)
        if tau * lq > gb and clearance(cf, ctx, x) > gb:
            return ContourSpec(tuple(float(ctx.absq ** xi) for xi in x), gb, maxGrid, f"balanced chamber (margin {tau:.4g})")
    why = pinchCheck(cf, ctx, gb)
    if why is not None:
        raise PinchDetected(why)
    sides, off, src = _side_exponents(bi, ctx, s, t)
    for d in _delta_candidates(delta):
        x = -sides * d - off
        if clearance(cf, ctx, x) > gb:
            return ContourSpec(tuple(float(ctx.absq ** xi) for xi in x), gb, maxGrid, f"{src}, delta={d:.6g}")
    raise PinchDetected("no side contour clears the poles for delta in (0, 0.25)")


def validateContour(bi: BalancedIntegrand, ctx: QContext, s: complex, t: complex, contour: ContourSpec) -> None:
    if len(contour.radii) != bi.dim:
        raise MalformedInput(f"contour has {len(contour.radii)} radii, integrand needs {bi.dim}")
    cf = compileFactors(bi, ctx, s, t)
    x = np.array([math.log(r) / math.log(ctx.absq) for r in contour.radii])
    c = clearance(cf, ctx, x)
    if c <= contour.guardband:
        raise PoleProximity(f"contour passes within {c:.2e} of a pole locus")


# ---------------------------------------------------------------------------
# trapezoid rule on the torus


@dataclass
class IntegralResult:
    value: complex
    estErr: float
    gridUsed: int
    contour: ContourSpec
    warnings: list[str] = field(default_factory=list)

    def to_json_obj(self) -> dict:
        return {
            "value": complexJson(self.value),
            "estErr": float(f"{self.estErr:.15g}"),
            "gridUsed": self.gridUsed,
            "contour": self.contour.to_json_obj(),
            "warnings": list(self.warnings),
        }


def complexJson(z: complex) -> dict:
    z = complex(z)
    return {"re": float(f"{z.real:.15g}"), "im": float(f"{z.imag:.15g}")}


def _torus_mean(fn: Callable[[np.ndarray], np.ndarray], radii: Sequence[float], n: int, threads: int) -> tuple[complex, float]:
    """Mean of fn over the n^dim grid of the torus and mean |fn|.

    The grid is processed in fixed blocks of first-axis indices and the
    block sums are added in block order, so the result does not depend on
    the number of threads.
    """
    dim = len(radii)
    if dim == 0:
        v = complex(fn(np.zeros((0,), dtype=complex)))
        return v, abs(v)
    roots = np.exp(2j * np.pi * np.arange(n) / n)
    axes = [r * roots for r in radii]
    rest = np.meshgrid(*axes[1:], indexing="ij") if dim > 1 else []

    inner = n ** (dim - 1)
    step = max(1, _BLOCK_POINTS // inner)
    blocks = [range(k, min(n, k + step)) for k in range(0, n, step)]

    def slab(ks: range):
        y0 = np.repeat(axes[0][ks.start : ks.stop], inner)
        if rest:
            Y = np.stack([y0] + [np.tile(g.ravel(), len(ks)) for g in rest])
        else:
            Y = y0[None, :]
        v = fn(Y)
        return complex(np.sum(v)), float(np.sum(np.abs(v)))

    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(slab, blocks))
    else:
        parts = [slab(b) for b in blocks]
    tot = math.fsum(p[0].real for p in parts) + 1j * math.fsum(p[0].imag for p in parts)
    mag = math.fsum(p[1] for p in parts)
    npts = n**dim
    return tot / npts, mag / npts


def evalIntegral(
    bi: BalancedIntegrand,
    ctx: QContext,
    s: complex = 1.0,
    t: complex = 1.0,
    contour: ContourSpec | None = None,
    tol: float = 1e-9,
    minGrid: int = 16,
    threads: int | None = None,
) -> IntegralResult:
    """Normalized integral over the contour by grid doubling.

    Stops when successive grids agree to ``tol`` relative to
    max(|I|, mean |integrand|); the second scale keeps integrals that
    vanish by cancellation from looping forever.
    """
    threads = defaultThreads() if threads is None else threads
    contour = contour or defaultContour(bi, ctx, s, t)
    validateContour(bi, ctx, s, t, contour)
    cf = compileFactors(bi, ctx, s, t)
    fn = lambda Y: integrandValues(cf, ctx, Y)
    warnings: list[str] = []
    if bi.dim == 0:
        v = cf.constValue
        return IntegralResult(v, 0.0, 1, contour, warnings)
    n = minGrid
    prev, _ = _torus_mean(fn, contour.radii, n, threads)
    while True:
        n2 = 2 * n
        if n2 > contour.maxGrid:
            raise NoConvergence(f"grid limit {contour.maxGrid} reached without agreement to {tol:g}")
        cur, mag = _torus_mean(fn, contour.radii, n2, threads)
        err = abs(cur - prev)
        scale = max(abs(cur), mag)
        if err <= tol * scale:
            if abs(cur) < mag * 1e-6:
                warnings.append("integral is small compared with the integrand; error is relative to mean |integrand|")
            return IntegralResult(cur, err, n2, contour, warnings)
        prev, n = cur, n2


# ---------------------------------------------------------------------------
# pointwise comparison of two integrands


@dataclass
class ComparisonReport:
    """Pointwise agreement of a compiled integrand with a reference one."""

    name: str
    variableMap: VariableMap | None
    maxRelErr: float
    samples: int
    contour: ContourSpec | None
    integralRelErr: float | None = None
    note: str = ""

    def ok(self, tol: float) -> bool:
        return self.variableMap is not None and self.maxRelErr <= tol

    def to_json_obj(self) -> dict:
        vm = self.variableMap
        return {
            "name": self.name,
            "matchedFactors": None if vm is None else [vm.matched, vm.total],
            "U": None if vm is None else [list(r) for r in vm.U],
            "kappa": None if vm is None else [[str(c) for c in k] for k in vm.kappa],
            "maxRelErr": self.maxRelErr,
            "samples": self.samples,
            "integralRelErr": self.integralRelErr,
            "note": self.note,
        }


def mapPoints(vm: VariableMap, ctx: QContext, per: Peripheral, Y: np.ndarray) -> np.ndarray:
    """Points y = K * Y^U in the source variables for target points Y (shape (dim, k))."""
    dim = Y.shape[0]
    out = np.empty_like(Y, dtype=complex)
    for j in range(dim):
        K = powNegQ(ctx, per.exponent(vm.kappa[j]))
        v = np.full(Y.shape[1:], K, dtype=complex)
        for i in range(dim):
            if vm.U[j][i]:
                v = v * Y[i] ** int(vm.U[j][i])
        out[j] = v
    return out


def compareIntegrands(
    src: BalancedIntegrand,
    ref: BalancedIntegrand,
    ctx: QContext,
    samples: int = 20,
    seed: int = 0,
    integrals: bool = False,
    vm: VariableMap | None = None,
) -> ComparisonReport:
    """Compare ``src`` with ``ref`` at random points of the reference contour.

    The reference variables Y are sampled on the reference contour (its
    annotated sides), with random unit-modulus s and t, and ``src`` is
    evaluated at the matched points y = K Y^U.  Unimodular monomial maps
    preserve the Haar measure, so pointwise agreement implies agreement of
    the integrals; with ``integrals`` both integrals are also computed.
    """
    vm = vm if vm is not None else matchIntegrands(src, ref)
    name = ref.name or src.name
    if vm is None:
        return ComparisonReport(name, None, math.inf, 0, None, note="no monomial map between the factor sets")
    rng = np.random.default_rng(seed)
    worst = 0.0
    contour = None
    ierr = None
    done = 0
    for k in range(samples):
        s, t = np.exp(2j * np.pi * rng.random(2))
        per = Peripheral.from_st(ctx, s, t)
        try:
            contour = defaultContour(ref, ctx, s, t, preferSides=True)
        except PinchDetected:
            contour = defaultContour(ref, ctx, s, t)
        th = np.exp(2j * np.pi * rng.random((ref.dim, 1)))
        Y = np.array(contour.radii, dtype=complex).reshape(ref.dim, 1) * th if ref.dim else np.zeros((0, 1), dtype=complex)
        fr = integrandValues(compileFactors(ref, ctx, s, t), ctx, Y)[0]
        y = mapPoints(vm, ctx, per, Y) if ref.dim else Y
        fs = integrandValues(compileFactors(src, ctx, s, t), ctx, y)[0]
        worst = max(worst, abs(fs - fr) / max(abs(fr), 1e-300))
        done += 1
        if integrals and k == 0:
            ir = evalIntegral(ref, ctx, s, t, contour=contour).value
            ys = [math.log(abs(complex(v))) / math.log(ctx.absq) for v in mapPoints(vm, ctx, per, np.array(contour.radii, dtype=complex).reshape(-1, 1))[:, 0]]
            cs = ContourSpec(tuple(ctx.absq**x for x in ys), contour.guardband, contour.maxGrid, "image of the reference contour")
            try:
                isrc = evalIntegral(src, ctx, s, t, contour=cs).value
                ierr = abs(isrc - ir) / max(abs(ir), 1e-12)
            except (PoleProximity, NoConvergence):
                ierr = math.inf
    note = "exact factor match" if vm.exact else f"{vm.total - vm.matched} of {vm.total} factors differ"
    return ComparisonReport(name, vm, worst, done, contour, ierr, note)


# ---------------------------------------------------------------------------
# pentagon integral identity


def psi0Angles(ctx: QContext, alpha: float, gamma: float, z, w):
    """Tetrahedral weight with angles: c G((-q)^(beta/pi) z) G((-q)^(alpha/pi)/w) G((-q)^(gamma/pi) w/z)."""
    beta = math.pi - alpha - gamma
    c = cValue(ctx)
    return (
        c
        * gq(ctx, powNegQ(ctx, beta / math.pi) * z, check=False)
        * gq(ctx, powNegQ(ctx, alpha / math.pi) / w, check=False)
        * gq(ctx, powNegQ(ctx, gamma / math.pi) * w / z, check=False)
    )


def compatibleAngles(a0: float, a2: float, a4: float, g0: float, g4: float) -> list[tuple[float, float, float]]:
    """Five angle triples related by the 2-3 move, from the free angles."""
    a1, a3 = a0 + a2, a2 + a4
    g1, g3 = g0 + a4, a0 + g4
    g2 = g1 + g3
    out = []
    for a, g in ((a0, g0), (a1, g1), (a2, g2), (a3, g3), (a4, g4)):
        out.append((a, math.pi - a - g, g))
    return out


def isCompatible(angles: Sequence[tuple[float, float, float]], tol: float = 1e-12) -> bool:
    (a0, b0, g0), (a1, b1, g1), (a2, b2, g2), (a3, b3, g3), (a4, b4, g4) = angles
    rel = [a1 - a0 - a2, a3 - a2 - a4, g1 - g0 - a4, g3 - a0 - g4, g2 - g1 - g3]
    sums = [a + b + g - math.pi for a, b, g in angles]
    return all(abs(r) < tol for r in rel + sums)


@dataclass
class PentagonReport:
    passed: bool
    relErr: float
    lhs: complex
    rhs: complex
    grid: int

    def to_json_obj(self) -> dict:
        return {
            "suite": "pentagon-integral",
            "passed": self.passed,
            "relErr": self.relErr,
            "lhs": complexJson(self.lhs),
            "rhs": complexJson(self.rhs),
            "grid": self.grid,
        }


def pentagonIntegralSides(ctx: QContext, angles, x, y, u, v, tol: float = 1e-12, maxGrid: int = 4096) -> tuple[complex, complex, int]:
    (a0, _, g0), (a1, _, g1), (a2, _, g2), (a3, _, g3), (a4, _, g4) = angles
    lhs = complex(psi0Angles(ctx, a3, g3, x, y) * psi0Angles(ctx, a1, g1, u, v))

    def rhs_grid(n):
        z = np.exp(2j * np.pi * np.arange(n) / n)
        vals = (
            psi0Angles(ctx, a0, g0, u / y, v / z)
            * psi0Angles(ctx, a2, g2, x * u * z / (y * v), z)
            * psi0Angles(ctx, a4, g4, x / v, y / z)
        )
        return complex(np.mean(vals))

    n = 32
    prev = rhs_grid(n)
    while True:
        n *= 2
        cur = rhs_grid(n)
        if abs(cur - prev) <= tol * max(abs(cur), 1e-300) or n >= maxGrid:
            return lhs, cur, n
        prev = cur


def verifyPentagonIntegral(ctx: QContext, angles, x=1.0, y=1.0, u=1.0, v=1.0, tol: float = 1e-8) -> PentagonReport:
    """Both sides of the non-constant pentagon identity for compatible positive angles on unit circles."""
    if not isCompatible(angles):
        raise MalformedInput("angles are not compatible")
    if min(min(a) for a in angles) <= 0:
        raise MalformedInput("angles must be positive")
    for val in (x, y, u, v):
        if abs(abs(val) - 1) > 1e-12:
            raise MalformedInput("x, y, u, v must lie on the unit circle")
    lhs, rhs, n = pentagonIntegralSides(ctx, angles, x, y, u, v)
    err = abs(lhs - rhs) / max(abs(lhs), 1e-300)
    return PentagonReport(err < tol, err, lhs, rhs, n)


def randomCompatibleAngles(rng) -> list[tuple[float, float, float]]:
    """Random positive compatible angles (rejection sampling on the free angles)."""
    while True:
        a0, a2, a4, g0, g4 = rng.uniform(0.02, 0.6, size=5) * math.pi
        angles = compatibleAngles(a0, a2, a4, g0, g4)
        if min(min(a) for a in angles) > 0.02:
            return angles


# ---------------------------------------------------------------------------
# families in the edge imbalances


@dataclass
class EpsilonFamilyResult:
    eps: list[float]
    values: list[complex]
    growthExponent: float | None
    diverges: bool
    warnings: list[str] = field(default_factory=list)

    def to_json_obj(self) -> dict:
        return {
            "eps": self.eps,
            "values": [complexJson(v) for v in self.values],
            "growthExponent": self.growthExponent,
            "diverges": self.diverges,
            "warnings": self.warnings,
        }


def evalEpsilonFamily(
    bi: BalancedIntegrand,
    ctx: QContext,
    s: complex,
    t: complex,
    epsPath: Sequence[float],
    direction: Sequence[float] | None = None,
    contour: ContourSpec | None = None,
    tol: float = 1e-9,
    maxGrid: int = 1024,
) -> EpsilonFamilyResult:
    """Integral along eps = e * direction (eps in units of pi) for e in ``epsPath``.

    The contour is fixed (by default the one chosen for the path point
    closest to eps = 0, where the pole-free region is narrowest) so that
    the values form one analytic family.
    A log-log fit of |I| against e over the path gives the growth exponent;
    a fitted exponent below -0.5 with growing values flags divergence as
    e -> 0.
    """
    nEps = len(bi.factors[0].epsCoeffs) if bi.factors else 0
    direction = np.ones(nEps) if direction is None else np.asarray(direction, dtype=float)
    if len(direction) != nEps:
        raise MalformedInput(f"direction must have {nEps} entries")
    values = []
    warnings = []
    if contour is None and len(epsPath):
        e0 = min(epsPath, key=abs)
        contour = defaultContour(_with_eps(bi, tuple(e0 * direction)), ctx, s, t, maxGrid=maxGrid)
    for e in epsPath:
        shifted = _with_eps(bi, tuple(e * direction))
        values.append(evalIntegral(shifted, ctx, s, t, contour, tol).value)
    growth = None
    diverges = False
    mags = np.abs(values)
    es = np.abs(np.asarray(epsPath, dtype=float))
    if len(values) >= 3 and np.all(es > 0) and np.all(mags > 0):
        slope = np.polyfit(np.log(es), np.log(mags), 1)[0]
        growth = float(slope)
        order = np.argsort(es)
        diverges = slope < -0.5 and mags[order[0]] > mags[order[-1]]
        if diverges:
            warnings.append("integral grows like |eps|^%.2f as eps -> 0" % slope)
    return EpsilonFamilyResult(list(map(float, epsPath)), values, growth, diverges, warnings)


def _with_eps(bi: BalancedIntegrand, epsVals: Sequence[float]) -> BalancedIntegrand:
    """Fold numeric eps values into the constant part of each prefactor."""

    def fold(f: Factor) -> Factor:
        add = sum((float(c) * v for c, v in zip(f.epsCoeffs, epsVals)), 0.0)
        pre = (f.prefactor[0] + Fraction(add).limit_denominator(10**12), f.prefactor[1], f.prefactor[2])
        return Factor(pre, f.monomial, f.tet, f.role, ())

    return BalancedIntegrand(
        bi.dim,
        tuple(fold(f) for f in bi.factors),
        tuple(fold(f) for f in bi.constPrefactors),
        bi.cPower,
        bi.preRadii,
        bi.sides,
        bi.name,
    )


def pinchedExample(eps: float = 0.0) -> BalancedIntegrand:
    """One-variable integrand G(z) G((-q)^eps / z), pinched at z = 1 when eps = 0."""
    fs = (
        Factor((Fraction(0), Fraction(0), Fraction(0)), (1,), 0, "alpha", (Fraction(0),)),
        Factor((Fraction(0), Fraction(0), Fraction(0)), (-1,), 0, "beta", (Fraction(1),)),
    )
    bi = BalancedIntegrand(1, fs, (), 0, None, (ContourSide(-1),), "pinched pair")
    return _with_eps(bi, (eps,)) if eps else bi
