"""Piecewise expanding unimodal maps on [-1, 1] and one-parameter families.

A map has two monotone branches meeting at the critical point c = 0, with
f(-1) = f(1) = -1 and |f'| bounded below by a constant > 1 away from c.
Families come in two kinds: Conjugation (f_t = h_t o f_0 o h_t^{-1} for an
explicit conjugator h_t(x) = x + t g(x) + t^2 r(x)) and Additive
(f_t = f_0 + t X o f_0).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .catalog import SmoothFunction, ZERO, polynomial


class DomainError(ValueError):
    pass


class InvariantViolation(ValueError):
    pass


_DOMAIN_TOL = 1e-12
_BOUNDARY_TOL = 1e-9


def invert_monotone(fn: Callable, targets, lo: float, hi: float, iters: int = 80):
    """Vectorized bracketed bisection for a monotone fn on [lo, hi].

    Resolves roots to interval width (hi-lo) * 2^-iters, far below 1e-13.
    """
    t = np.atleast_1d(np.asarray(targets, dtype=float))
    a = np.full_like(t, lo)
    b = np.full_like(t, hi)
    increasing = float(fn(hi)) >= float(fn(lo))
    sgn = 1.0 if increasing else -1.0
    for _ in range(iters):
        m = 0.5 * (a + b)
        fm = sgn * np.asarray(fn(m), dtype=float)
        below = fm < sgn * t
        a = np.where(below, m, a)
        b = np.where(below, b, m)
    return 0.5 * (a + b)


@dataclass(frozen=True)
class PiecewiseExpandingMap:
    """Two-branch expanding unimodal map with derivatives up to order 3."""

    left: SmoothFunction
    right: SmoothFunction
    expansion_lower_bound: float
    critical_value: float
    name: str = ""

    @classmethod
    def create(cls, left: SmoothFunction, right: SmoothFunction, name: str = "",
               samples: int = 1000) -> "PiecewiseExpandingMap":
        xl = np.linspace(-1.0, 0.0, samples)
        xr = np.linspace(0.0, 1.0, samples)
        lc = float(np.squeeze(left.f(0.0)))
        rc = float(np.squeeze(right.f(0.0)))
        if abs(float(np.squeeze(left.f(-1.0))) + 1.0) > _BOUNDARY_TOL:
            raise InvariantViolation(f"{name}: f(-1) != -1")
        if abs(float(np.squeeze(right.f(1.0))) + 1.0) > _BOUNDARY_TOL:
            raise InvariantViolation(f"{name}: f(1) != -1")
        if abs(lc - rc) > _BOUNDARY_TOL:
            raise InvariantViolation(f"{name}: branches disagree at c = 0")
        fc = 0.5 * (lc + rc)
        if fc > 1.0 + _DOMAIN_TOL:
            raise InvariantViolation(f"{name}: f(0) = {fc} > 1")
        lam = min(float(np.min(np.abs(left.df(xl)))),
                  float(np.min(np.abs(right.df(xr)))))
        if lam <= 1.0:
            raise InvariantViolation(f"{name}: expansion bound {lam} <= 1")
        return cls(left, right, lam, fc, name)

    def _select(self, x, lf: Callable, rf: Callable):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        xv = np.atleast_1d(x)
        if np.any(xv < -1.0 - _DOMAIN_TOL) or np.any(xv > 1.0 + _DOMAIN_TOL):
            raise DomainError("argument outside [-1, 1]")
        out = np.where(xv <= 0.0, lf(xv), rf(xv))
        return float(out[0]) if scalar else out

    def __call__(self, x):
        return self._select(x, self.left.f, self.right.f)

    def derivative(self, x, order: int = 1):
        """One-sided convention at c = 0: the left branch value is used."""
        if order == 1:
            return self._select(x, self.left.df, self.right.df)
        if order == 2:
            return self._select(x, self.left.d2f, self.right.d2f)
        if order == 3:
            return self._select(x, self.left.d3f, self.right.d3f)
        raise ValueError("order must be 1..3")

    def branch(self, tag: str) -> SmoothFunction:
        if tag in ("left", "critical"):
            return self.left
        if tag == "right":
            return self.right
        raise KeyError(tag)


def evaluate(m: PiecewiseExpandingMap, x):
    return m(x)


def tent_map() -> PiecewiseExpandingMap:
    return PiecewiseExpandingMap.create(
        polynomial([1.0, 2.0], "tent_left"),
        polynomial([1.0, -2.0], "tent_right"),
        name="tent",
    )


def skew_tent(a: float) -> PiecewiseExpandingMap:
    """Slopes +a / -a with f(0) = a - 1; expanding unimodal for 1 < a <= 2."""
    if not 1.0 < a <= 2.0:
        raise InvariantViolation("skew tent needs 1 < a <= 2")
    return PiecewiseExpandingMap.create(
        polynomial([a - 1.0, a], f"skew{a}_left"),
        polynomial([a - 1.0, -a], f"skew{a}_right"),
        name=f"skew-{a}",
    )


def inverse_branches(m: PiecewiseExpandingMap, x: float):
    """All preimages f(y) = x with branch tags, via bracketed bisection.

    Returns 0, 1 or 2 entries.  At x = f(0) both branches return y ~ 0, so
    the two entries share the same location.
    """
    x = float(x)
    if x < -1.0 - _DOMAIN_TOL or x > 1.0 + _DOMAIN_TOL:
        raise DomainError("argument outside [-1, 1]")
    out = []
    if x <= m.critical_value + 1e-13:
        yl = float(invert_monotone(m.left.f, x, -1.0, 0.0)[0])
        out.append((yl, "left"))
        yr = float(invert_monotone(m.right.f, x, 0.0, 1.0)[0])
        out.append((yr, "right"))
    return out


@dataclass(frozen=True)
class CriticalOrbit:
    """Forward orbit of the critical value c_1 = f(0) with bookkeeping.

    points[k-1] = c_k = f^k(0); derivative_products[k-1] = (f^{k-1})'(c_1).
    """

    points: np.ndarray
    derivative_products: np.ndarray
    period: Optional[int]
    eventual_period: Optional[int]
    preperiod: Optional[int]
    truncation_K: int
    near_critical: bool


def critical_orbit(m: PiecewiseExpandingMap, K: int, period_tol: float = 1e-9) -> CriticalOrbit:
    if K < 1:
        raise ValueError("K must be >= 1")
    pts = np.empty(K)
    dps = np.empty(K)
    pts[0] = m.critical_value
    dps[0] = 1.0
    near_critical = False
    period = None
    for k in range(1, K):
        prev = pts[k - 1]
        pts[k] = m(prev)
        side = m.left.df if prev <= 0.0 else m.right.df
        dps[k] = dps[k - 1] * float(side(prev))
        if abs(prev) <= period_tol and prev != 0.0:
            near_critical = True
    # period of c itself: c_q back at 0
    for q in range(1, K + 1):
        cq = pts[q - 1] if q >= 1 else 0.0
        if abs(cq) <= period_tol:
            period = q
            break
    eventual_period = None
    preperiod = None
    found = False
    for j in range(1, K):
        for i in range(j):
            if abs(pts[j] - pts[i]) <= period_tol:
                eventual_period = j - i
                preperiod = i
                found = True
                break
        if found:
            break
    return CriticalOrbit(pts, dps, period, eventual_period, preperiod, K, near_critical)


# ---------------------------------------------------------------------------
# families


@dataclass(frozen=True)
class MapFamily:
    """One-parameter family t -> f_t through f_0 at t = 0.

    kind "conjugation": h_t(x) = x + t g(x) + t^2 r(x), f_t = h_t o f_0 o h_t^-1,
    direction v = g o f_0 - f_0' g.
    kind "additive": f_t = f_0 + t (X o f_0), direction v = X o f_0.
    """

    kind: str
    base: PiecewiseExpandingMap
    g: SmoothFunction = ZERO
    r: SmoothFunction = ZERO
    X: SmoothFunction = ZERO
    t_max: float = 0.1
    name: str = ""

    @classmethod
    def conjugation(cls, base, g, r=ZERO, t_max=0.1, name="", validate=True):
        fam = cls("conjugation", base, g=g, r=r, t_max=t_max, name=name)
        if validate:
            fam._validate()
        return fam

    @classmethod
    def additive(cls, base, X, t_max=0.1, name="", validate=True):
        fam = cls("additive", base, X=X, t_max=t_max, name=name)
        if validate:
            fam._validate()
        return fam

    # conjugator h_t and derivatives in x
    def h(self, t, x):
        return np.asarray(x, dtype=float) + t * self.g.f(x) + t * t * self.r.f(x)

    def h_prime(self, t, x):
        return 1.0 + t * self.g.df(x) + t * t * self.r.df(x)

    def h_second(self, t, x):
        return t * self.g.d2f(x) + t * t * self.r.d2f(x)

    def h_third(self, t, x):
        return t * self.g.d3f(x) + t * t * self.r.d3f(x)

    def h_inverse(self, t, x):
        if abs(float(self.h(t, -1.0)) + 1.0) > 1e-12 or abs(float(self.h(t, 1.0)) - 1.0) > 1e-12:
            raise InvariantViolation("h_t does not fix the endpoints (need g(+-1)=r(+-1)=0)")
        return invert_monotone(lambda y: self.h(t, y), x, -1.0, 1.0)

    def _validate(self):
        ts = np.linspace(-self.t_max, self.t_max, 11)
        if self.kind == "conjugation":
            for fn in (self.g, self.r):
                for e in (-1.0, 1.0):
                    if abs(float(fn.f(e))) > 1e-12:
                        raise InvariantViolation("g and r must vanish at +-1")
            xs = np.linspace(-1.0, 1.0, 101)
            for t in ts:
                if np.any(self.h_prime(t, xs) <= 0.0):
                    raise InvariantViolation(f"h_t not increasing at t = {t}")
        elif self.kind == "additive":
            if abs(float(self.X.f(-1.0))) > 1e-12:
                raise InvariantViolation("additive direction needs X(-1) = 0")
        else:
            raise InvariantViolation(f"unknown family kind {self.kind!r}")
        for t in ts:
            family_map(self, float(t))  # raises on invariant failure

    # direction data at t = 0
    def v(self, x):
        """v = d/dt f_t |_{t=0}; at x = 0 the left-branch f_0' is used."""
        if self.kind == "additive":
            return self.X.f(self.base(x))
        return self.g.f(self.base(x)) - self.base.derivative(x) * self.g.f(x)

    def v_prime(self, x):
        if self.kind == "additive":
            return self.X.df(self.base(x)) * self.base.derivative(x)
        f0p = self.base.derivative(x)
        f0pp = self.base.derivative(x, 2)
        return self.g.df(self.base(x)) * f0p - f0pp * self.g.f(x) - f0p * self.g.df(x)

    def dtt_f(self, x):
        """Second t-derivative of f_t at t = 0."""
        if self.kind == "additive":
            return np.zeros_like(np.asarray(x, dtype=float))
        f0 = self.base(x)
        f0p = self.base.derivative(x)
        f0pp = self.base.derivative(x, 2)
        g, gp = self.g.f, self.g.df
        r = self.r.f
        return 2.0 * ((g(x) * gp(x) - r(x)) * f0p + 0.5 * g(x) ** 2 * f0pp
                      - g(x) * f0p * gp(f0) + r(f0))


def _conjugated_branch(fam: MapFamily, t: float, order_src: PiecewiseExpandingMap, tag: str) -> SmoothFunction:
    """Branch of h_t o f_0 o h_t^{-1} restricted to the nominal domain of `tag`.

    f_0 and its derivatives are evaluated with global side selection, so the
    closure is the honest f_t even when the turning point drifts off 0.
    """
    base = fam.base

    def u_and_derivs(x):
        u = fam.h_inverse(t, x)
        hp = fam.h_prime(t, u)
        hpp = fam.h_second(t, u)
        hppp = fam.h_third(t, u)
        up = 1.0 / hp
        upp = -hpp / hp**3
        uppp = (3.0 * hpp**2 - hp * hppp) / hp**5
        return u, up, upp, uppp

    def val(x):
        u, _, _, _ = u_and_derivs(x)
        return fam.h(t, base(u))

    def d1(x):
        u, up, _, _ = u_and_derivs(x)
        return fam.h_prime(t, base(u)) * base.derivative(u) * up

    def d2(x):
        u, up, upp, _ = u_and_derivs(x)
        w = base(u)
        A, B = fam.h_prime(t, w), base.derivative(u)
        return (fam.h_second(t, w) * B**2 * up**2
                + A * base.derivative(u, 2) * up**2 + A * B * upp)

    def d3(x):
        u, up, upp, uppp = u_and_derivs(x)
        w = base(u)
        A, B = fam.h_prime(t, w), base.derivative(u)
        Ap, App = fam.h_second(t, w), fam.h_third(t, w)
        Bp, Bpp = base.derivative(u, 2), base.derivative(u, 3)
        return (App * B**3 * up**3 + Ap * (2.0 * B * Bp * up**3 + 2.0 * B**2 * up * upp)
                + Ap * B * up * Bp * up**2 + A * Bpp * up**3 + A * Bp * 2.0 * up * upp
                + Ap * B**2 * up * upp + A * Bp * up * upp + A * B * uppp)

    return SmoothFunction(f"conj[{t}]{tag}", val, d1, d2, d3)


def _additive_branch(fam: MapFamily, t: float, br: SmoothFunction, tag: str) -> SmoothFunction:
    X = fam.X

    def val(x):
        return br.f(x) + t * X.f(br.f(x))

    def d1(x):
        return br.df(x) * (1.0 + t * X.df(br.f(x)))

    def d2(x):
        w = br.f(x)
        return br.d2f(x) * (1.0 + t * X.df(w)) + t * X.d2f(w) * br.df(x) ** 2

    def d3(x):
        w = br.f(x)
        return (br.d3f(x) * (1.0 + t * X.df(w))
                + 3.0 * t * br.df(x) * br.d2f(x) * X.d2f(w)
                + t * X.d3f(w) * br.df(x) ** 3)

    return SmoothFunction(f"add[{t}]{tag}", val, d1, d2, d3)


def family_map(fam: MapFamily, t: float) -> PiecewiseExpandingMap:
    """The member f_t, with branch derivatives assembled by the chain rule."""
    if abs(t) > fam.t_max + 1e-15:
        raise DomainError(f"|t| = {abs(t)} exceeds t_max = {fam.t_max}")
    if t == 0.0:
        return fam.base
    if fam.kind == "additive":
        left = _additive_branch(fam, t, fam.base.left, "left")
        right = _additive_branch(fam, t, fam.base.right, "right")
    else:
        left = _conjugated_branch(fam, t, fam.base, "left")
        right = _conjugated_branch(fam, t, fam.base, "right")
    return PiecewiseExpandingMap.create(left, right, name=f"{fam.name or fam.kind}[t={t}]")
