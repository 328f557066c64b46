"""Exact truncated q-series with exponents in (1/2)Z.

Exponents are stored as integer counts of half-units, so ``q**(k/2)`` is the
key ``k``.  A series carries a truncation order ``trunc``: every exponent at
or above it is unknown.  Coefficients are Python integers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping


@dataclass(frozen=True)
class HalfExpSeries:
    """Truncated Laurent series in ``q**(1/2)`` with integer coefficients."""

    coeffs: Mapping[int, int] = field(default_factory=dict)
    trunc: int = 0

    def __post_init__(self) -> None:
        clean = {int(k): int(v) for k, v in self.coeffs.items() if v != 0 and k < self.trunc}
        object.__setattr__(self, "coeffs", clean)
        object.__setattr__(self, "trunc", int(self.trunc))

    # construction -----------------------------------------------------
    @classmethod
    def one(cls, trunc: int) -> "HalfExpSeries":
        return cls({0: 1}, trunc)

    @classmethod
    def zero(cls, trunc: int) -> "HalfExpSeries":
        return cls({}, trunc)

    @classmethod
    def monomial(cls, exponent: int, coeff: int, trunc: int) -> "HalfExpSeries":
        return cls({exponent: coeff}, trunc)

    # inspection -------------------------------------------------------
    def valuation(self) -> int:
        """Lowest stored exponent, or ``trunc`` for the zero series."""
        return min(self.coeffs) if self.coeffs else self.trunc

    def coeff(self, exponent: int) -> int:
        if exponent >= self.trunc:
            raise ValueError(f"exponent {exponent} is beyond truncation {self.trunc}")
        return self.coeffs.get(exponent, 0)

    def is_integral(self) -> bool:
        """True when every stored exponent is a whole power of q."""
        return all(k % 2 == 0 for k in self.coeffs)

    def truncate(self, trunc: int) -> "HalfExpSeries":
        return HalfExpSeries(self.coeffs, min(trunc, self.trunc))

    def items(self):
        return sorted(self.coeffs.items())

    # ring operations --------------------------------------------------
    def __neg__(self) -> "HalfExpSeries":
        return HalfExpSeries({k: -v for k, v in self.coeffs.items()}, self.trunc)

    def __add__(self, other: "HalfExpSeries") -> "HalfExpSeries":
        t = min(self.trunc, other.trunc)
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0) + v
        return HalfExpSeries(out, t)

    def __sub__(self, other: "HalfExpSeries") -> "HalfExpSeries":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, int):
            return HalfExpSeries({k: v * other for k, v in self.coeffs.items()}, self.trunc)
        if not isinstance(other, HalfExpSeries):
            return NotImplemented
        t = min(
            self.trunc + other.valuation(),
            other.trunc + self.valuation(),
            self.trunc,
            other.trunc,
        )
        out: dict[int, int] = {}
        b_items = sorted(other.coeffs.items())
        for ka, va in self.coeffs.items():
            for kb, vb in b_items:
                k = ka + kb
                if k >= t:
                    break
                out[k] = out.get(k, 0) + va * vb
        return HalfExpSeries(out, t)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, HalfExpSeries):
            return NotImplemented
        return self.trunc == other.trunc and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash((self.trunc, tuple(sorted(self.coeffs.items()))))

    def agrees_with(self, other: "HalfExpSeries") -> bool:
        """Equality of all coefficients below the common truncation."""
        t = min(self.trunc, other.trunc)
        return self.truncate(t).coeffs == other.truncate(t).coeffs

    def shift(self, halfunits: int) -> "HalfExpSeries":
        """Multiply by ``q**(halfunits/2)``."""
        return HalfExpSeries({k + halfunits: v for k, v in self.coeffs.items()}, self.trunc + halfunits)

    def double(self) -> "HalfExpSeries":
        """Substitute q -> q**2."""
        return HalfExpSeries({2 * k: v for k, v in self.coeffs.items()}, 2 * self.trunc)

    def inverse(self) -> "HalfExpSeries":
        """Reciprocal of a series whose constant term is +1 or -1."""
        c0 = self.coeffs.get(0, 0)
        if self.valuation() != 0 or c0 not in (1, -1):
            raise ValueError("inverse needs valuation 0 and a unit constant term")
        t = self.trunc
        a = sorted((k, v) for k, v in self.coeffs.items() if k > 0)
        inv: dict[int, int] = {0: c0}
        for n in range(1, t):
            acc = 0
            for k, v in a:
                if k > n:
                    break
                acc += v * inv.get(n - k, 0)
            if acc:
                inv[n] = -c0 * acc
        return HalfExpSeries(inv, t)

    def __truediv__(self, other: "HalfExpSeries") -> "HalfExpSeries":
        return self * other.inverse()

    # numerics ---------------------------------------------------------
    def evaluate(self, q: complex, sqrt_q: complex | None = None) -> complex:
        """Numeric value at ``q`` using ``sqrt_q`` for odd half-units."""
        if sqrt_q is None:
            sqrt_q = complex(q) ** 0.5
        return sum(v * sqrt_q**k for k, v in self.coeffs.items())

    # serialization ----------------------------------------------------
    def to_json_obj(self) -> dict:
        return {"terms": [[k, str(v)] for k, v in self.items()], "trunc": self.trunc}

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), separators=(",", ":"))

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "HalfExpSeries":
        return cls({int(k): int(v) for k, v in obj["terms"]}, int(obj["trunc"]))

    def pretty(self) -> str:
        parts = []
        for k, v in self.items():
            e = Fraction(k, 2)
            mono = "" if e == 0 else ("q" if e == 1 else f"q^{e}")
            if mono:
                coef = "" if v == 1 else ("-" if v == -1 else f"{v}*")
                parts.append(f"{coef}{mono}")
            else:
                parts.append(str(v))
        body = " + ".join(parts).replace("+ -", "- ") if parts else "0"
        return f"{body} + O(q^{Fraction(self.trunc, 2)})"


def series_sum(terms: Iterable[HalfExpSeries], trunc: int) -> HalfExpSeries:
    """Add series into a fixed truncation order."""
    acc: dict[int, int] = {}
    for s in terms:
        if s.trunc < trunc:
            raise ValueError(f"summand truncated at {s.trunc} < {trunc}")
        for k, v in s.coeffs.items():
            if k < trunc:
                acc[k] = acc.get(k, 0) + v
    return HalfExpSeries(acc, trunc)


# ----------------------------------------------------------------------
# products and building blocks
# ----------------------------------------------------------------------

def _poly_times_binomial(poly: list[int], k: int, c: int) -> None:
    """In place ``poly *= (1 + c*x**k)`` truncated to ``len(poly)``."""
    for i in range(len(poly) - 1, k - 1, -1):
        poly[i] += c * poly[i - k]


def pochhammerSeries(a: int, sign: int, step: int, order: int) -> HalfExpSeries:
    """(sign*q^(a/2); q^(step/2))_inf truncated below half-unit ``order``."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if step <= 0 or order <= 0 or a < 0:
        raise ValueError("need step > 0, order > 0 and a >= 0")
    if a == 0 and sign == 1:
        raise ValueError("first factor (1 - 1) vanishes identically")
    poly = [0] * order
    poly[0] = 1
    const = 1
    i = 0
    while a + i * step < order:
        k = a + i * step
        if k == 0:
            const *= 2  # factor (1 + 1)
        else:
            _poly_times_binomial(poly, k, -sign)
        i += 1
    return HalfExpSeries({k: const * v for k, v in enumerate(poly)}, order)


@lru_cache(maxsize=None)
def _inv_qpoch_q(n: int, nterms: int) -> tuple[int, ...]:
    """Coefficients in q (integer powers) of 1/(q;q)_n below q**nterms."""
    out = [0] * max(nterms, 1)
    out[0] = 1
    if nterms <= 0:
        return tuple(out)
    for i in range(1, n + 1):
        if i >= nterms:
            break
        # multiply by 1/(1 - q^i) = running prefix sums with stride i
        for j in range(i, nterms):
            out[j] += out[j - i]
    return tuple(out[:nterms])


@lru_cache(maxsize=None)
def _inv_pair(n1: int, n2: int, nterms: int) -> tuple[int, ...]:
    """Coefficients in q of 1/((q)_n1 (q)_n2) below q**nterms."""
    a = _inv_qpoch_q(n1, nterms)
    b = _inv_qpoch_q(n2, nterms)
    out = [0] * nterms
    for i, va in enumerate(a):
        if va:
            for j in range(nterms - i):
                out[i + j] += va * b[j]
    return tuple(out)


def cSeries(order: int) -> HalfExpSeries:
    """c(q) = (q;q)^2 / (q^2;q^2) to half-unit ``order``."""
    if order <= 0:
        raise ValueError("order must be positive")
    num = pochhammerSeries(2, 1, 2, order)
    den = pochhammerSeries(4, 1, 4, order)
    return (num * num) / den


def jSeries(n: int, order: int) -> HalfExpSeries:
    """J(n)(q) = sum_k q^(k(k+1)/2) / ((q)_k (q)_(n+k)) to half-unit ``order``."""
    if order <= 0:
        raise ValueError("order must be positive")
    acc: dict[int, int] = {}
    k = max(0, -n)
    while k * (k + 1) < order:
        e0 = k * (k + 1)
        nterms = (order - e0 + 1) // 2
        coeffs = _inv_pair(k, n + k, nterms)
        for j, v in enumerate(coeffs):
            if v:
                key = e0 + 2 * j
                if key < order:
                    acc[key] = acc.get(key, 0) + v
        k += 1
    return HalfExpSeries(acc, order)


def _tet_exponent(m: int, e: int, n: int) -> int:
    """Half-unit exponent of the n-th summand of I_Delta(m, e)."""
    return n * (n + 1) - (2 * n + e) * m


@lru_cache(maxsize=4096)
def _tet_index_cached(m: int, e: int, order: int) -> HalfExpSeries:
    acc: dict[int, int] = {}
    n = max(0, -e)
    # the exponent is convex in n with minimum near n = m - 1/2
    while True:
        e0 = _tet_exponent(m, e, n)
        if e0 >= order and n >= m:
            break
        if e0 < order:
            nterms = (order - e0 + 1) // 2
            coeffs = _inv_pair(n, n + e, nterms)
            sgn = -1 if n % 2 else 1
            for j, v in enumerate(coeffs):
                if v:
                    key = e0 + 2 * j
                    if key < order:
                        acc[key] = acc.get(key, 0) + sgn * v
        n += 1
    return HalfExpSeries(acc, order)


def tetIndexSeries(m: int, e: int, order: int) -> HalfExpSeries:
    """Tetrahedron index I_Delta(m, e)(q) truncated below half-unit ``order``."""
    if order <= 0:
        raise ValueError("order must be positive")
    return _tet_index_cached(int(m), int(e), int(order))


def _hat(m: int, e: int, order: int) -> HalfExpSeries:
    inner = -(-(order - 2 * e) // 2)  # ceil((order - 2e)/2)
    base = _tet_index_cached(int(m), int(e), inner).double().shift(2 * e)
    if e % 2:
        base = -base
    return base.truncate(order)


def iDeltaHat(m: int, e: int, order: int) -> HalfExpSeries:
    """(-q)^e * I_Delta(m, e)(q^2), truncated below half-unit ``order``."""
    if order <= 0:
        raise ValueError("order must be positive")
    return _hat(m, e, order)


def minDegreeTet(m: int, e: int) -> Fraction:
    """Minimum over admissible n of the summand exponent of I_Delta(m, e)."""
    n0 = max(0, -e)
    # vertex of n(n+1)/2 - n*m is at n = m - 1/2
    cands = {n0, max(n0, m - 1), max(n0, m)}
    return min(Fraction(_tet_exponent(m, e, n), 2) for n in cands)


def tetValuationBound(m: int, e: int) -> Fraction:
    """Valuation lower bound of I_Delta(m, e) using its Z/3 orbit.

    As series, I_Delta(m, e) = (-q^(1/2))^m I_Delta(-e-m, m)
    = (-q^(1/2))^(-e) I_Delta(e, -e-m), so every orbit member's term-wise
    bound (shifted accordingly) applies and the largest one is kept.
    """
    return max(
        minDegreeTet(m, e),
        Fraction(m, 2) + minDegreeTet(-e - m, m),
        Fraction(-e, 2) + minDegreeTet(e, -e - m),
    )


def hatValuationBound(m: int, e: int) -> Fraction:
    """Valuation lower bound of I^Delta(m, e) in powers of q."""
    return 2 * tetValuationBound(m, e) + e


# ----------------------------------------------------------------------
# identity checks
# ----------------------------------------------------------------------

@dataclass
class Report:
    name: str
    passed: bool
    checked: int
    failure: str | None = None
    details: dict = field(default_factory=dict)

    def to_json_obj(self) -> dict:
        return {
            "suite": self.name,
            "passed": self.passed,
            "checked": self.checked,
            "failure": self.failure,
            "details": self.details,
        }


def _e3_window(m1: int, m2: int, e1: int, e2: int, order: int) -> list[int]:
    """Values of e3 whose summand can reach below ``order`` half-units.

    The summand bound (in q) is e3 plus three orbit bounds.  It grows
    quadratically as e3 -> -inf and at least linearly as e3 -> +inf, so a
    window of width O(order + charges^2) contains every admissible e3.
    """

    def bound(e3: int) -> Fraction:
        return (
            e3
            + tetValuationBound(m1, e1 + e3)
            + tetValuationBound(m2, e2 + e3)
            + tetValuationBound(m1 + m2, e3)
        )

    c = max(abs(m1), abs(m2), abs(e1), abs(e2), 1)
    width = order + 4 * c * c + 10
    limit = Fraction(order, 2)
    return [e3 for e3 in range(-width, width + 1) if bound(e3) < limit]


def _working_order(order: int, terms: list[tuple[int, int]]) -> int:
    """Order needed per factor so that a product is exact below ``order``.

    Each factor may have negative valuation; the other factors' valuation
    bounds tell how deep the partner must be computed.
    """
    vals = [2 * tetValuationBound(m, e) for m, e in terms]
    total = sum(vals)
    return max(1, order, math.ceil(order - total + max(vals)))


def pentagonSides(m1: int, m2: int, e1: int, e2: int, order: int) -> tuple[HalfExpSeries, HalfExpSeries]:
    """Both sides of the tetrahedron-index pentagon identity to ``order``."""
    lterms = [(m1 - e2, e1), (m2 - e1, e2)]
    w = _working_order(order, lterms)
    lhs = (tetIndexSeries(*lterms[0], w) * tetIndexSeries(*lterms[1], w)).truncate(order)
    rhs_terms = []
    for e3 in _e3_window(m1, m2, e1, e2, order):
        terms = [(m1, e1 + e3), (m2, e2 + e3), (m1 + m2, e3)]
        w3 = _working_order(order - 2 * e3, terms)
        prod = tetIndexSeries(*terms[0], w3) * tetIndexSeries(*terms[1], w3) * tetIndexSeries(*terms[2], w3)
        rhs_terms.append(prod.shift(2 * e3))
    rhs = series_sum([t.truncate(order) if t.trunc >= order else t for t in rhs_terms], order)
    return lhs, rhs


def verifyPentagonSeries(order: int, bound: int) -> Report:
    """Check the pentagon identity for all charges bounded by ``bound``.

    ``order`` is measured in powers of q.
    """
    if order <= 0 or bound < 0:
        raise ValueError("order must be positive and bound non-negative")
    half = 2 * order
    checked = 0
    rng = range(-bound, bound + 1)
    for m1 in rng:
        for m2 in rng:
            for e1 in rng:
                for e2 in rng:
                    lhs, rhs = pentagonSides(m1, m2, e1, e2, half)
                    checked += 1
                    if not lhs.agrees_with(rhs):
                        return Report(
                            "pentagon-series",
                            False,
                            checked,
                            f"m1={m1} m2={m2} e1={e1} e2={e2}",
                            {"lhs": lhs.to_json_obj(), "rhs": rhs.to_json_obj()},
                        )
    return Report("pentagon-series", True, checked, None, {"order": order, "bound": bound})


def verifySymmetries(order: int, bound: int) -> Report:
    """Check the Z/2 and Z/3 symmetries of I^Delta for |m|, |e| <= bound.

    ``order`` is measured in powers of q.
    """
    half = 2 * order
    checked = 0

    def hat(m: int, e: int, shift: int) -> HalfExpSeries:
        # (-q)^shift * I^Delta(m, e), computed deep enough to reach `half`
        s = _hat(m, e, half - 2 * shift).shift(2 * shift)
        return -s if shift % 2 else s

    for m in range(-bound, bound + 1):
        for e in range(-bound, bound + 1):
            base = iDeltaHat(m, e, half)
            families = {
                "z2": hat(-e, -m, e + m),
                "z3a": hat(-e - m, m, e),
                "z3b": hat(e, -e - m, e + m),
                "z2b": hat(-m, m + e, 0),
            }
            for name, other in families.items():
                checked += 1
                if not base.agrees_with(other):
                    return Report("symmetries", False, checked, f"{name} at m={m} e={e}")
    return Report("symmetries", True, checked, None, {"order": order, "bound": bound})


def psi0CoefficientSeries(m: int, e: int, order: int) -> HalfExpSeries:
    """c(q) * sum_{k1-k3=e, k3-k2=m} (-q)^k1 J(k1) J(k2) J(k3) to half-unit ``order``.

    With k3 free, k1 = k3 + e and k2 = k3 - m.  J(n) has valuation
    k0(k0+1)/2 with k0 = max(0, -n), so each summand's valuation is bounded
    below by k1 plus those three values; this sets the k3 window.
    """

    def jval(n: int) -> int:
        k0 = max(0, -n)
        return k0 * (k0 + 1) // 2

    def bound(k3: int) -> int:
        k1, k2 = k3 + e, k3 - m
        return k1 + jval(k1) + jval(k2) + jval(k3)

    limit = (order + 1) // 2
    width = order + abs(e) + abs(m) + 5
    terms = []
    for k3 in range(-width, width + 1):
        if bound(k3) >= limit:
            continue
        k1, k2 = k3 + e, k3 - m
        o = max(order, order - 2 * k1)
        prod = (jSeries(k1, o) * jSeries(k2, o) * jSeries(k3, o)).shift(2 * k1)
        if k1 % 2:
            prod = -prod
        terms.append(prod.truncate(order))
    inner = series_sum(terms, order)
    return (cSeries(order) * inner).truncate(order)
