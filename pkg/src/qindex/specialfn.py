"""Double-precision evaluation of q-Pochhammer products, G_q, theta, psi and psi0.

All functions accept complex scalars or numpy arrays.  Powers of -q go
through :func:`powNegQ`, which uses the logarithm stored in the context.
"""

from __future__ import annotations

import cmath
import math
from functools import lru_cache
from dataclasses import dataclass, field

import numpy as np

from .errors import PoleProximity
from .qseries import HalfExpSeries, hatValuationBound, iDeltaHat, jSeries


@dataclass(frozen=True)
class QContext:
    """Immutable evaluation context for a fixed nome ``q``.

    ``h`` is a logarithm of ``-q`` with negative real part; it defines
    ``(-q)**z = exp(z*h)``.  By default it is the principal logarithm.
    """

    q: complex
    h: complex | None = None
    epsProduct: float = 1e-16
    guardband: float = 1e-8

    def __post_init__(self) -> None:
        q = complex(self.q)
        if not 0 < abs(q) < 1:
            raise ValueError(f"need 0 < |q| < 1, got {q}")
        h = cmath.log(-q) if self.h is None else complex(self.h)
        if h.real >= 0 or abs(cmath.exp(h) + q) > 1e-12 * max(1.0, abs(q)):
            raise ValueError("h must satisfy exp(h) = -q with Re(h) < 0")
        if not (0 < self.epsProduct < 1 and 0 < self.guardband < 1):
            raise ValueError("epsProduct and guardband must lie in (0, 1)")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "h", h)

    @property
    def absq(self) -> float:
        return abs(self.q)

    def with_q(self, q: complex) -> "QContext":
        return QContext(q, None, self.epsProduct, self.guardband)


def _as_array(x):
    return np.asarray(x, dtype=complex)


def _scalar_or_array(out, like):
    return complex(out) if np.ndim(like) == 0 else out


def pochhammerInf(ctx: QContext, x, base: complex | None = None):
    """(x; base)_inf with ``base`` defaulting to ``ctx.q``.

    Factors are multiplied until ``|base|^k |x|`` falls below
    ``ctx.epsProduct``; the neglected tail perturbs the log by at most
    ``eps/(1-|base|)``.
    """
    b = ctx.q if base is None else complex(base)
    xa = _as_array(x)
    amax = float(np.max(np.abs(xa))) if xa.size else 0.0
    if amax == 0.0:
        return _scalar_or_array(np.ones_like(xa), x)
    ab = abs(b)
    nfac = max(1, int(math.ceil(math.log(ctx.epsProduct / amax) / math.log(ab))) + 1)
    out = np.ones_like(xa)
    term = xa.copy()
    for _ in range(nfac):
        out *= 1.0 - term
        term = term * b
    return _scalar_or_array(out, x)


def _nearest_power_distance(ctx: QContext, z, sign: complex, offset: int, base_pow: int = 1):
    """Relative distance from z to the set sign*q^(offset - base_pow*k), k >= 0."""
    za = _as_array(z)
    lq = math.log(ctx.absq)
    with np.errstate(divide="ignore"):
        # exponent e with |q|^e = |z|
        e = np.log(np.abs(za)) / lq
    kf = (offset - e) / base_pow
    best = np.full(za.shape, np.inf)
    for dk in (-1, 0, 1):
        k = np.maximum(np.rint(kf) + dk, 0)
        with np.errstate(over="ignore", invalid="ignore"):
            target = sign * np.power(np.complex128(ctx.q), offset - base_pow * k)
            d = np.abs(za - target) / np.abs(target)
        d = np.where(np.isfinite(d), d, np.inf)
        best = np.minimum(best, d)
    return best


def gqPoleDistance(ctx: QContext, z):
    """Relative distance from z to the pole set q^(-N) of G_q."""
    return _nearest_power_distance(ctx, z, 1.0, 0)


def gq(ctx: QContext, z, check: bool = True):
    """G_q(z) = (-q/z; q)_inf / (z; q)_inf."""
    za = _as_array(z)
    if np.any(za == 0):
        raise PoleProximity("G_q is not defined at z = 0")
    if check:
        d = gqPoleDistance(ctx, za)
        if np.any(d < ctx.guardband):
            raise PoleProximity(f"argument within guardband of the pole set q^-N (min rel dist {float(np.min(d)):.3g})")
    num = pochhammerInf(ctx, -ctx.q / za)
    den = pochhammerInf(ctx, za)
    return _scalar_or_array(num / den, z)


def powNegQ(ctx: QContext, z):
    """(-q)^z = exp(z*h)."""
    za = _as_array(z)
    return _scalar_or_array(np.exp(za * ctx.h), z)


def cValue(ctx: QContext) -> complex:
    """c(q) = (q;q)^2 / (q^2;q^2)."""
    a = pochhammerInf(ctx, ctx.q)
    b = pochhammerInf(ctx, ctx.q**2, base=ctx.q**2)
    return a * a / b


def _theta_sum(base: complex, x, eps: float):
    xa = _as_array(x)
    ab = abs(base)
    rmax = float(np.max(np.maximum(np.abs(xa), 1.0 / np.abs(xa))))
    out = np.ones_like(xa)
    k = 1
    while True:
        mag = ab ** (k * k) * rmax**k
        if mag < eps and k > 1:
            break
        c = base ** (k * k)
        out += c * (xa**k + xa ** (-k))
        k += 1
        if k > 10000:
            raise RuntimeError("theta series failed to converge")
    return _scalar_or_array(out, x)


def thetaQ(ctx: QContext, x, base: complex | None = None):
    """theta_b(x) = sum_k b^(k^2) x^k with symmetric truncation (b defaults to q)."""
    b = ctx.q if base is None else complex(base)
    return _theta_sum(b, x, ctx.epsProduct)


def thetaProduct(ctx: QContext, x):
    """Triple-product form (q^2;q^2)(-q x;q^2)(-q/x;q^2)."""
    q = ctx.q
    q2 = q * q
    xa = _as_array(x)
    out = pochhammerInf(ctx, q2, base=q2) * pochhammerInf(ctx, -q * xa, base=q2) * pochhammerInf(ctx, -q / xa, base=q2)
    return _scalar_or_array(out, x)


def psiPoleDistance(ctx: QContext, z, m: int):
    """Relative distance to the poles -q^(-1-|m|-2k), k >= 0."""
    return _nearest_power_distance(ctx, z, -1.0, -1 - abs(m), 2)


def psi(ctx: QContext, z, m: int, check: bool = True):
    """psi(z, m) = (-q^(1-m)/z; q^2) / (-q^(1-m) z; q^2).

    The first |m| factors cancel in pairs, leaving
    z^(-max(m,0)) (-q^(1+|m|)/z; q^2) / (-q^(1+|m|) z; q^2), which is the form
    evaluated here.
    """
    za = _as_array(z)
    if check and np.any(psiPoleDistance(ctx, za, m) < ctx.guardband):
        raise PoleProximity("psi argument within guardband of its pole set")
    q2 = ctx.q**2
    a = ctx.q ** (1 + abs(m))
    out = pochhammerInf(ctx, -a / za, base=q2) / pochhammerInf(ctx, -a * za, base=q2)
    if m > 0:
        out = out * za ** (-m)
    return _scalar_or_array(out, z)


def psi0(ctx: QContext, z, w, check: bool = True):
    """Tetrahedral weight c(q) G_q(-q z) G_q(1/w) G_q(w/z)."""
    za, wa = _as_array(z), _as_array(w)
    out = cValue(ctx) * gq(ctx, -ctx.q * za, check) * gq(ctx, 1.0 / wa, check) * gq(ctx, wa / za, check)
    return _scalar_or_array(out, z if np.ndim(z) else w)


def psi0FromPsi(ctx: QContext, z: complex, w: complex, tol: float = 1e-17) -> complex:
    """sum_m psi(z, m) w^m, valid for 1 < |w| < |z| < |q|^-1."""
    total = psi(ctx, z, 0)
    m = 1
    while True:
        a = psi(ctx, z, m) * w**m
        b = psi(ctx, z, -m) * w ** (-m)
        total += a + b
        if abs(a) + abs(b) < tol * max(1.0, abs(total)) or m > 400:
            break
        m += 1
    return total


@lru_cache(maxsize=None)
def _hat_bound(m: int, e: int) -> float:
    return float(hatValuationBound(m, e))


@lru_cache(maxsize=65536)
def _hat_value(q: complex, m: int, e: int, digits: int) -> complex:
    """Numeric I^Delta(m, e) at q, accurate to |q|^digits relative to its bound."""
    order = 2 * (math.floor(_hat_bound(m, e)) + digits) + 2
    return iDeltaHat(m, e, order).evaluate(q)


def _ring(B: int):
    if B == 0:
        yield 0, 0
        return
    for k in range(-B, B + 1):
        yield B, k
        yield -B, k
    for k in range(-B + 1, B):
        yield k, B
        yield k, -B


def psi0FromSeries(ctx: QContext, z: complex, w: complex, tol: float = 1e-17, maxBox: int = 200) -> complex:
    """Double Laurent sum of I^Delta(m, e) z^e w^m over a growing box.

    A term is skipped when its a-priori size |q|^vb |z|^e |w|^m (vb the
    valuation bound) is below ``tol``; the box grows until an entire
    boundary ring is skipped.
    """
    lq = math.log(ctx.absq)
    lz, lw = math.log(abs(z)), math.log(abs(w))
    digits = int(math.ceil(math.log(tol) / lq)) + 1
    logtol = math.log(tol)
    q = complex(ctx.q)
    total = 0j
    for B in range(maxBox + 1):
        live = 0
        for m, e in _ring(B):
            if _hat_bound(m, e) * lq + e * lz + m * lw < logtol:
                continue
            live += 1
            total += _hat_value(q, m, e, digits) * z**e * w**m
        if live == 0 and B > 2:
            return total
    raise RuntimeError("double series did not settle inside the box limit")


def phiQ(ctx: QContext, z, m: int, check: bool = True):
    """phi_q(z, m) = mu(z, m) / mu(1/z, m), with mu(z, m) = (-q^(1-m) z; q^2)_inf."""
    za = _as_array(z)
    if check and np.any(np.abs(np.abs(za) - 1.0) > 1e-6):
        raise ValueError("phiQ expects |z| = 1")
    q2 = ctx.q**2
    a = ctx.q ** (1 - m)
    den = pochhammerInf(ctx, -a / za, base=q2)
    if check and np.any(np.abs(den) < ctx.guardband):
        raise PoleProximity("phi_q denominator vanishes")
    out = pochhammerInf(ctx, -a * za, base=q2) / den
    return _scalar_or_array(out, z)


# ----------------------------------------------------------------------
# Laurent coefficients by sampling on circles
# ----------------------------------------------------------------------

def laurentCoefficients(fn, radius: float, npts: int, nrange) -> dict[int, complex]:
    """Coefficients c_n of fn(z) = sum c_n z^n from npts samples on |z| = radius."""
    theta = 2 * np.pi * np.arange(npts) / npts
    z = radius * np.exp(1j * theta)
    vals = _as_array(fn(z))
    fft = np.fft.fft(vals) / npts
    out = {}
    for n in nrange:
        out[n] = complex(fft[n % npts] / radius**n)
    return out


def laurentCoefficients2(fn, r1: float, r2: float, npts: int, mrange, erange) -> dict[tuple[int, int], complex]:
    """Coefficients of fn(z, w) = sum a_{m,e} z^e w^m on |z| = r1, |w| = r2."""
    theta = 2 * np.pi * np.arange(npts) / npts
    z = r1 * np.exp(1j * theta)[:, None]
    w = r2 * np.exp(1j * theta)[None, :]
    vals = _as_array(fn(z, w))
    fft = np.fft.fft2(vals) / npts**2
    out = {}
    for m in mrange:
        for e in erange:
            out[(m, e)] = complex(fft[e % npts, m % npts] / (r1**e * r2**m))
    return out


def gqLaurentNumeric(ctx: QContext, n: int, radius: float = 0.5, npts: int = 256) -> complex:
    """Coefficient of z^n in G_q(z) from samples on |z| = radius < 1."""
    return laurentCoefficients(lambda z: gq(ctx, z, check=False), radius, npts, [n])[n]


# ----------------------------------------------------------------------
# identity checks
# ----------------------------------------------------------------------

@dataclass
class NumericReport:
    name: str
    passed: bool
    maxRelErr: float
    samples: int
    tolerance: float
    details: dict = field(default_factory=dict)

    def to_json_obj(self) -> dict:
        return {
            "suite": self.name,
            "passed": self.passed,
            "maxRelErr": float(f"{self.maxRelErr:.15g}"),
            "samples": self.samples,
            "tolerance": self.tolerance,
            "details": self.details,
        }


def _rel(a, b) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def dopsumSides(ctx: QContext, z: complex, w: complex, p: complex) -> tuple[complex, complex]:
    """Both sides of the theta-quotient identity at (z, w) with p^2 = q."""
    q = ctx.q
    th = lambda x: thetaQ(ctx, x)
    thp = lambda x: thetaQ(ctx, x, base=p)
    lhs = th(z * w**-2) / th(z) + w * th(q * w**2 / z) / th(q / z)
    const = pochhammerInf(ctx, q) / pochhammerInf(ctx, q * q, base=q * q) ** 2
    rhs = const * thp(p * w / z) * thp(w / p) / thp(z / p)
    return lhs, rhs


def verifyDopsum(ctx: QContext, samples: int = 100, seed: int = 0, tol: float = 1e-10) -> NumericReport:
    """Theta-quotient identity at random points, for both square roots of q.

    Points are drawn on generic circles |z| in (0.5, 2), |w| in (0.5, 2),
    and the principal root p is re-run as -p to confirm branch independence.
    """
    rng = np.random.default_rng(seed)
    p0 = cmath.sqrt(ctx.q)
    worst = {"+p": 0.0, "-p": 0.0}
    for _ in range(samples):
        z = rng.uniform(0.5, 2.0) * cmath.exp(2j * math.pi * rng.uniform())
        w = rng.uniform(0.5, 2.0) * cmath.exp(2j * math.pi * rng.uniform())
        for tag, p in (("+p", p0), ("-p", -p0)):
            lhs, rhs = dopsumSides(ctx, z, w, p)
            worst[tag] = max(worst[tag], _rel(lhs, rhs))
    err = max(worst.values())
    return NumericReport("dopsum", err < tol, err, samples, tol, {"perBranch": worst})


def verifyTripleProduct(ctx: QContext, samples: int = 100, seed: int = 0, tol: float = 1e-10) -> NumericReport:
    rng = np.random.default_rng(seed)
    err = 0.0
    for _ in range(samples):
        x = rng.uniform(0.3, 3.0) * cmath.exp(2j * math.pi * rng.uniform())
        err = max(err, _rel(thetaQ(ctx, x), thetaProduct(ctx, x)))
    return NumericReport("triple-product", err < tol, err, samples, tol)


def verifyInversion(ctx: QContext, samples: int = 200, mmax: int = 5, seed: int = 0, tol: float = 1e-11) -> NumericReport:
    """phi_q(z, m) phi_q(1/z, -m) = z^m on the unit circle."""
    rng = np.random.default_rng(seed)
    err = 0.0
    for _ in range(samples):
        z = cmath.exp(2j * math.pi * rng.uniform())
        m = int(rng.integers(-mmax, mmax + 1))
        lhs = phiQ(ctx, z, m) * phiQ(ctx, 1 / z, -m)
        err = max(err, _rel(lhs, z**m))
    return NumericReport("inversion", err < tol, err, samples, tol)


def samplePsi0Domain(ctx: QContext, rng, margin: float = 0.15) -> tuple[complex, complex]:
    """Random (z, w) with 1 < |w| < |z| < |q|^-1.

    In units of log(1/|q|) the moduli keep ``margin`` from each boundary of
    the domain, where the double series converges too slowly to be useful.
    """
    L = -math.log(ctx.absq)
    u = rng.uniform(margin, 1 - 2 * margin)
    v = rng.uniform(u + margin, 1 - margin)
    w = math.exp(u * L) * cmath.exp(2j * math.pi * rng.uniform())
    z = math.exp(v * L) * cmath.exp(2j * math.pi * rng.uniform())
    return z, w


def verifyPsi0(ctx: QContext, samples: int = 50, seed: int = 0, tol: float = 1e-8) -> NumericReport:
    """Product form of psi0 vs the psi-sum and the I^Delta double series."""
    rng = np.random.default_rng(seed)
    err_sum = err_series = 0.0
    for _ in range(samples):
        z, w = samplePsi0Domain(ctx, rng)
        prod = psi0(ctx, z, w)
        err_sum = max(err_sum, _rel(prod, psi0FromPsi(ctx, z, w)))
        err_series = max(err_series, _rel(prod, psi0FromSeries(ctx, z, w)))
    err = max(err_sum, err_series)
    return NumericReport("psi0", err < tol, err, samples, tol, {"psiSum": err_sum, "doubleSeries": err_series})


def _series_order_for(ctx: QContext, eps: float) -> int:
    """Half-unit order at which |q|^(order/2) drops below eps."""
    return int(math.ceil(2 * math.log(eps) / math.log(ctx.absq))) + 2


def jSeriesNumeric(ctx: QContext, n: int, order: int | None = None) -> complex:
    order = order or _series_order_for(ctx, 1e-17)
    s: HalfExpSeries = jSeries(n, order)
    return s.evaluate(ctx.q)
