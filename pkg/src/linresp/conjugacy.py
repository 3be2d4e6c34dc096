"""Horizontality, the twisted cohomological equation, and Hoelder estimates.

The twisted cohomological equation (TCE) for a direction v over a map f is

    v(x) = alpha(f(x)) - f'(x) alpha(x),      alpha(c) = 0, c = 0.

Rearranged, alpha(x) = (alpha(f(x)) - v(x)) / f'(x); iterating the
rearrangement gives the unique bounded solution

    alpha(x) = - sum_{i >= 0} v(f^i(x)) / (f^{i+1})'(x),

which converges geometrically with ratio 1 / inf|f'|.  Two independent
solvers are provided: direct series summation and the pull-back fixed-point
iteration; their agreement is used as a cross-validation oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .bvspaces import GridFunction
from .maps import PiecewiseExpandingMap, critical_orbit


class TceDivergenceError(RuntimeError):
    pass


class HorizontalityTruncationError(RuntimeError):
    pass


@dataclass(frozen=True)
class TCESolution:
    alpha: GridFunction
    truncation_error_bound: float
    method: str
    iterations_or_terms: int
    residual: float
    interpolation_error_estimate: float = 0.0
    cesaro: Optional[GridFunction] = None

    @property
    def error_bound(self) -> float:
        return self.truncation_error_bound + self.interpolation_error_estimate


@dataclass(frozen=True)
class HolderEstimate:
    beta: float
    constant: float
    pair_budget: int


@dataclass(frozen=True)
class HorizontalityResult:
    value: float
    error_bar: float
    convention: str
    terms: int

    def __float__(self):
        return self.value


def _sided_fprime(m: PiecewiseExpandingMap, x: np.ndarray) -> np.ndarray:
    return np.where(x <= 0.0, m.left.df(x), m.right.df(x))


def _series_values(m: PiecewiseExpandingMap, v: Callable, pts: np.ndarray,
                   tol: float, period_tol: float):
    """Bounded-series alpha at arbitrary points; returns (values, N, bound).

    If the orbit of a point enters the period_tol ball around c the partial
    sum at that point is already exact (alpha(c) = 0 kills the tail).
    """
    lam = 1.0 / m.expansion_lower_bound
    probe = np.linspace(-1.0, 1.0, 2001)
    sup_v = float(np.max(np.abs(v(probe))))
    if sup_v == 0.0:
        return np.zeros_like(pts), 1, 0.0
    N = max(1, math.ceil(math.log(tol * (1.0 - lam) / sup_v) / math.log(lam)))
    N = min(N, 5000)
    cur = np.array(pts, dtype=float)
    prod = np.ones_like(cur)
    acc = np.zeros_like(cur)
    active = np.ones(cur.shape, dtype=bool)
    for _ in range(N):
        active &= np.abs(cur) > period_tol
        if not np.any(active):
            break
        prod = prod * _sided_fprime(m, cur)
        acc = acc + np.where(active, v(cur) / prod, 0.0)
        cur = np.clip(m(cur), -1.0, 1.0)
    bound = sup_v * lam**N / (1.0 - lam)
    return -acc, N, bound


def _tce_residual(m: PiecewiseExpandingMap, v: Callable, alpha: GridFunction) -> float:
    xs = alpha.nodes
    off = np.abs(xs) > 1e-14
    x = xs[off]
    res = v(x) - alpha(np.clip(m(x), -1.0, 1.0)) + _sided_fprime(m, x) * alpha.values[off]
    return float(np.max(np.abs(res)))


def _interp_allowance(values: np.ndarray, lam: float) -> float:
    if values.size < 3:
        return 0.0
    d2 = np.abs(values[2:] - 2.0 * values[1:-1] + values[:-2])
    return 10.0 * float(np.max(d2)) / 8.0 / (1.0 - lam)


def tce_pointwise(m: PiecewiseExpandingMap, v: Callable, pts,
                  tol: float = 1e-12, period_tol: float = 1e-9) -> np.ndarray:
    """Bounded-series alpha evaluated at arbitrary points (no interpolation).

    Useful when alpha is only Holder continuous and the O(h^beta) error of
    interpolating grid values at off-grid points would dominate.
    """
    vals, _, _ = _series_values(m, v, np.asarray(pts, dtype=float),
                                tol, period_tol)
    return vals


def solve_tce_series(m: PiecewiseExpandingMap, v: Callable, grid_size: int,
                     tol: float = 1e-12, period_tol: float = 1e-9) -> TCESolution:
    """Direct summation of the bounded series at every grid node."""
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    xs = np.linspace(-1.0, 1.0, grid_size + 1)
    vals, N, bound = _series_values(m, v, xs, tol, period_tol)
    if grid_size % 2 == 0:
        vals[grid_size // 2] = 0.0  # alpha(c) = 0 normalization, exact
    alpha = GridFunction(vals)
    res = _tce_residual(m, v, alpha)
    return TCESolution(alpha, bound, "series", N, res,
                       _interp_allowance(vals, 1.0 / m.expansion_lower_bound))


def default_pullback_seed(m: PiecewiseExpandingMap, v: Callable, grid_size: int,
                          K: int = 60, period_tol: float = 1e-9) -> GridFunction:
    """Continuous seed satisfying the TCE on the truncated critical orbit.

    Orbit values are produced by the bounded series (they satisfy the TCE
    along the orbit by construction and stay bounded, unlike naive forward
    propagation which amplifies any horizontality defect geometrically);
    the seed is the piecewise-linear interpolant through those constraints,
    pinned to 0 at -1, 0, +1.
    """
    orbit = critical_orbit(m, K, period_tol)
    pts = np.concatenate(([-1.0, 0.0, 1.0], orbit.points))
    vals_orbit, _, _ = _series_values(m, v, orbit.points, 1e-12, period_tol)
    vals = np.concatenate(([0.0, 0.0, 0.0], vals_orbit))
    order = np.argsort(pts, kind="stable")
    pts, vals = pts[order], vals[order]
    keep = np.concatenate(([True], np.diff(pts) > 1e-12))
    pts, vals = pts[keep], vals[keep]
    xs = np.linspace(-1.0, 1.0, grid_size + 1)
    return GridFunction(np.interp(xs, pts, vals))


def solve_tce_pullback(m: PiecewiseExpandingMap, v: Callable,
                       alpha0: Optional[GridFunction] = None, n_iter: int = 80,
                       grid_size: int = 2048, period_tol: float = 1e-9) -> TCESolution:
    """Pull-back iteration alpha <- (alpha o f - v) / f' on the grid."""
    if n_iter < 1:
        raise ValueError("n_iter must be >= 1")
    if alpha0 is None:
        alpha0 = default_pullback_seed(m, v, grid_size, period_tol=period_tol)
    xs = alpha0.nodes
    fx = np.clip(m(xs), -1.0, 1.0)
    fp = _sided_fprime(m, xs)
    crit = np.abs(xs) <= 1e-14
    lam = 1.0 / m.expansion_lower_bound
    sup_v = float(np.max(np.abs(v(xs)))) + 1e-300
    vx = v(xs)
    a = alpha0.values.copy()
    cesaro = np.zeros_like(a)
    diff = np.inf
    for _ in range(n_iter):
        af = np.interp(fx, xs, a)
        a_new = (af - vx) / fp
        a_new[crit] = 0.0
        diff = float(np.max(np.abs(a_new - a)))
        a = a_new
        cesaro += a
        if np.max(np.abs(a)) > 1e6 * sup_v:
            raise TceDivergenceError("pull-back iterates diverge (v not horizontal?)")
    cesaro /= n_iter
    bound = diff * lam / (1.0 - lam) + _interp_allowance(a, lam)
    alpha = GridFunction(a)
    res = _tce_residual(m, v, alpha)
    return TCESolution(alpha, bound, "pullback", n_iter, res,
                       _interp_allowance(a, lam), cesaro=GridFunction(cesaro))


def solve_tce_second_order(family, alpha: TCESolution, grid_size: int,
                           tol: float = 1e-12) -> TCESolution:
    """Solve the second-order TCE for alpha2 = d^2/dt^2 h_t o h_t^{-1} |_0.

    The right-hand side is w = f'' alpha^2 + 2 (d_t f') alpha + d_tt f,
    with d_t f' = v' for both family kinds.
    """
    m = family.base
    A = alpha.alpha

    def w(x):
        x = np.asarray(x, dtype=float)
        f2 = np.where(x <= 0.0, m.left.d2f(x), m.right.d2f(x))
        ax = A(x)
        return f2 * ax**2 + 2.0 * family.v_prime(x) * ax + family.dtt_f(x)

    return solve_tce_series(m, w, grid_size, tol)


def horizontality_defect(m: PiecewiseExpandingMap, v: Callable,
                         convention: str = "printed", K: int = 200,
                         period_tol: float = 1e-9) -> HorizontalityResult:
    """Horizontality sum over the critical orbit, in either index convention.

    "printed":  J = sum_{j=0}^{M-1} v(c_j) / (f^j)'(c_1),  c_0 = c.
    "tce":      D = sum_{j=0}^{M-1} v(c_{1+j}) / (f^j)'(c_1) - v(c),
    the defect whose vanishing makes the bounded series consistent with
    alpha(c_1) = v(c).  The two are exact negatives of each other term by
    term.  If c is periodic with period q the sum is finite (M = q);
    otherwise it is truncated with a geometric tail bound.
    """
    if convention not in ("printed", "tce"):
        raise ValueError(f"unknown convention {convention!r}")
    orbit = critical_orbit(m, K, period_tol)
    lam = 1.0 / m.expansion_lower_bound
    probe = np.linspace(-1.0, 1.0, 2001)
    sup_v = float(np.max(np.abs(v(probe))))
    if orbit.period is not None:
        M = orbit.period
        err = 0.0
    else:
        M = K
        err = sup_v * lam**K / (1.0 - lam)
        if err > 1e-10:
            raise HorizontalityTruncationError(
                f"tail bound {err} not below 1e-10 within K = {K} terms")
    # c_j for j = 0..M-1 and (f^j)'(c_1) = derivative_products[j]
    cj = np.concatenate(([0.0], orbit.points[:max(M - 1, 0)]))
    dj = orbit.derivative_products[:M]
    J = float(np.sum(np.asarray(v(cj), dtype=float) / dj))
    if convention == "printed":
        return HorizontalityResult(J, err, convention, M)
    return HorizontalityResult(-J, err, convention, M)


def holder_norm(u: GridFunction, beta: float, pair_budget: int = 4000,
                seed: int = 0) -> HolderEstimate:
    """Estimated Hoelder constant sup |u(x)-u(y)| / |x-y|^beta over node pairs.

    All pairs are examined for grids up to 2000 nodes; larger grids use
    stratified sampling with pair_budget pairs per dyadic |x-y| scale
    (deterministic given seed; sample sets are nested in pair_budget).
    """
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    vals = u.values
    n = vals.size
    h = u.h
    best = 0.0
    if n <= 2000:
        examined = n * (n - 1) // 2
        for d in range(1, n):
            num = np.max(np.abs(vals[d:] - vals[:-d]))
            best = max(best, num / (d * h) ** beta)
    else:
        examined = 0
        scale = 0
        while (1 << scale) < n:
            rng = np.random.default_rng([seed, scale])
            lo, hi = 1 << scale, min(1 << (scale + 1), n)
            ds = rng.integers(lo, hi, size=pair_budget)
            iis = rng.integers(0, n - 1, size=pair_budget) % (n - ds)
            num = np.abs(vals[iis + ds] - vals[iis])
            best = max(best, float(np.max(num / (ds * h) ** beta)))
            examined += pair_budget
            scale += 1
    return HolderEstimate(beta, float(best), examined)
