"""Discretized weighted transfer operators on the uniform grid.

Collocation with piecewise-linear interpolation (not Ulam boxes): the matrix
row for node x_i distributes the weight at each preimage y of x_i onto the
two interpolation nodes bracketing y.  The matrix is stored sparse (at most
four entries per row) and densified on demand for LU resolvent solves.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import lu_factor, lu_solve

from .bvspaces import GridFunction, quadrature_weights
from .maps import PiecewiseExpandingMap, invert_monotone


class NoConvergenceError(RuntimeError):
    pass


class MeanZeroError(ValueError):
    pass


class SingularSystemError(RuntimeError):
    pass


def default_weight(m: PiecewiseExpandingMap):
    def w(y, tag):
        return 1.0 / np.abs(m.branch(tag).df(y))

    return w


def branch_preimages(m: PiecewiseExpandingMap, xs: np.ndarray, tag: str):
    """Vectorized preimages of the nodes xs under one branch.

    Returns (mask, y): mask selects the xs within the branch's range and y
    are the corresponding preimages (left branch in [-1,0], right in [0,1]).
    """
    mask = xs <= m.critical_value + 1e-12
    lo, hi = (-1.0, 0.0) if tag == "left" else (0.0, 1.0)
    y = invert_monotone(m.branch(tag).f, xs[mask], lo, hi)
    return mask, np.clip(y, lo, hi)


@dataclass(frozen=True)
class TransferOperator:
    map: PiecewiseExpandingMap
    weight: Optional[Callable]  # weight(y, branch_tag), None = 1/|f'|
    grid_size: int
    matrix: sp.csr_matrix
    snap_distance: float

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(-1.0, 1.0, self.grid_size + 1)

    def apply(self, values: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(values, dtype=float)

    def dense(self) -> np.ndarray:
        cache = getattr(self, "_dense_cache", None)
        if cache is None:
            cache = self.matrix.toarray()
            object.__setattr__(self, "_dense_cache", cache)
        return cache

    def dump(self, path, flags: int = 0) -> None:
        """Binary dump: 16-byte header (magic XFER, u32 M, u32 flags,
        4 pad bytes), then dense row-major little-endian doubles."""
        with open(path, "wb") as fh:
            fh.write(b"XFER")
            fh.write(struct.pack("<II4x", self.grid_size, flags))
            fh.write(self.dense().astype("<f8").tobytes(order="C"))


def build_operator(m: PiecewiseExpandingMap, weight: Optional[Callable],
                   grid_size: int) -> TransferOperator:
    if grid_size % 2 != 0 or grid_size < 8:
        raise ValueError("grid_size must be even and >= 8")
    M = grid_size
    xs = np.linspace(-1.0, 1.0, M + 1)
    h = 2.0 / M
    wfn = weight if weight is not None else default_weight(m)
    rows, cols, data = [], [], []
    for tag in ("left", "right"):
        mask, y = branch_preimages(m, xs, tag)
        if not np.any(mask):
            continue
        wv = np.asarray(wfn(y, tag), dtype=float) + np.zeros_like(y)
        pos = np.clip((y + 1.0) / h, 0.0, float(M))
        j = np.minimum(pos.astype(int), M - 1)
        frac = pos - j
        idx = np.nonzero(mask)[0]
        rows.append(idx)
        cols.append(j)
        data.append(wv * (1.0 - frac))
        rows.append(idx)
        cols.append(j + 1)
        data.append(wv * frac)
    A = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(M + 1, M + 1),
    ).tocsr()
    fc_node = round((m.critical_value + 1.0) / h) * h - 1.0
    return TransferOperator(m, weight, M, A, abs(m.critical_value - fc_node))


def apply_transfer_pointwise(m: PiecewiseExpandingMap, weight: Optional[Callable],
                             phi: Callable, xs: np.ndarray) -> np.ndarray:
    """(L phi)(xs) with phi evaluated exactly at the preimages (no stencil).

    Used where phi has known jumps (saltus parts) that a grid stencil would
    smear.
    """
    wfn = weight if weight is not None else default_weight(m)
    out = np.zeros_like(np.asarray(xs, dtype=float))
    for tag in ("left", "right"):
        mask, y = branch_preimages(m, xs, tag)
        if not np.any(mask):
            continue
        out[mask] += np.asarray(wfn(y, tag), dtype=float) * np.asarray(phi(y), dtype=float)
    return out


@dataclass(frozen=True)
class SpectralData:
    leading_eigenvalue: float
    density: GridFunction
    dual: np.ndarray
    gap_estimate: float
    residual: float
    iterations: int


def leading_spectrum(op: TransferOperator, tol: float = 1e-13,
                     max_iter: int = 5000, seed: int = 0) -> SpectralData:
    """Leading eigenpair by power iteration, dual by transposed iteration,
    spectral gap by deflated power iteration."""
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    A = op.matrix
    n = op.grid_size + 1
    phi = np.ones(n)
    lam = 1.0
    it = 0
    for it in range(1, max_iter + 1):
        y = A @ phi
        lam_new = float(phi @ y) / float(phi @ phi)
        ninf = np.max(np.abs(y))
        if ninf == 0.0:
            raise NoConvergenceError("operator annihilated the iterate")
        phi_new = y / ninf
        res = float(np.max(np.abs(A @ phi_new - lam_new * phi_new)))
        phi, lam = phi_new, lam_new
        if res <= 0.5e-10 * np.max(np.abs(phi)) and it > 2:
            break
    else:
        raise NoConvergenceError(
            f"power iteration: no convergence in {max_iter} iterations "
            "(spectral gap may be ~1 at this grid)")
    qw = quadrature_weights(op.grid_size)
    mass = float(qw @ phi)
    if abs(mass) < 1e-300:
        raise NoConvergenceError("eigenvector has zero mean; cannot normalize")
    rho = phi / mass
    # dual (left) eigenvector
    At = A.T.tocsr()
    d = qw.copy()
    for _ in range(max_iter):
        z = At @ d
        nz = float(np.sum(np.abs(z)))
        if nz == 0.0:
            break
        z = z / nz
        if np.max(np.abs(z - d)) < 1e-14:
            d = z
            break
        d = z
    tot = float(d @ np.ones(n))
    if abs(tot) > 1e-300:
        d = d / tot
    # gap estimate by deflated power iteration
    rng = np.random.default_rng(seed)
    y = rng.standard_normal(n)
    drho = float(d @ rho)
    ratios = []
    for k in range(120):
        y = y - rho * (float(d @ y) / drho)
        z = A @ y
        z = z - rho * (float(d @ z) / drho)
        ny, nz2 = np.max(np.abs(y)), np.max(np.abs(z))
        if nz2 == 0.0 or ny == 0.0:
            ratios.append(0.0)
            break
        if k >= 40:
            ratios.append(nz2 / ny)
        y = z / nz2
    gap = float(np.exp(np.mean(np.log(np.maximum(ratios, 1e-300))))) / abs(lam) if ratios else 0.0
    residual = float(np.max(np.abs(A @ rho - lam * rho)))
    return SpectralData(lam, GridFunction(rho), d, gap, residual, it)


def resolvent_solve(op: TransferOperator, spectral: SpectralData,
                    w: GridFunction, tol: float = 1e-9) -> GridFunction:
    """Solve (I - A) u = w on the quadrature-mean-zero complement.

    Dense LU on the deflated system (I - A + rho d^T / (d rho)), one step of
    iterative refinement, then projection of u back to mean zero.
    """
    scale = max(1.0, float(np.max(np.abs(w.values))))
    if abs(w.quadrature()) > 1e-8 * scale:
        raise MeanZeroError(f"quadrature mean of w is {w.quadrature()}, not 0")
    rho = spectral.density.values
    d = spectral.dual
    drho = float(d @ rho)
    if abs(drho) < 1e-14:
        raise SingularSystemError("dual and density are numerically orthogonal")
    lu = getattr(op, "_lu_cache", None)
    if lu is None:
        A = op.dense()
        C = np.eye(A.shape[0]) - A + np.outer(rho, d) / drho
        try:
            lu = lu_factor(C)
        except Exception as exc:  # LinAlgError
            raise SingularSystemError(str(exc))
        object.__setattr__(op, "_lu_cache", lu)
    b = w.values
    u = lu_solve(lu, b)
    # one iterative-refinement step on the deflated system
    Au = op.apply(u)
    r = b - (u - Au + rho * (float(d @ u) / drho))
    u = u + lu_solve(lu, r)
    qw = quadrature_weights(op.grid_size)
    u = u - rho * (float(qw @ u) / float(qw @ rho))
    res = (u - op.apply(u)) - b
    res = res - rho * (float(d @ res) / drho)
    if np.max(np.abs(res)) > tol * max(float(np.max(np.abs(b))), 1e-300):
        raise SingularSystemError(
            f"resolvent residual {np.max(np.abs(res))} exceeds tolerance")
    return GridFunction(u)


def weighted_operator(family, s: float, t: float, psi: Callable,
                      grid_size: int) -> TransferOperator:
    """Operator for the base map with weight exp(s psi(h_t)) / |f_t'(h_t)|.

    f_t'(h_t(y)) = h_t'(f_0(y)) f_0'(y) / h_t'(y) by the chain rule, so no
    inversion of h_t is ever needed.
    """
    if family.kind != "conjugation":
        raise TypeError("weighted_operator needs a Conjugation family (explicit h_t)")
    base = family.base

    def weight(y, tag):
        br = base.branch(tag)
        fy = br.f(y)
        fpt = family.h_prime(t, fy) * br.df(y) / family.h_prime(t, y)
        return np.exp(s * np.asarray(psi(family.h(t, y)), dtype=float)) / np.abs(fpt)

    return build_operator(base, weight, grid_size)


def derivative_operator(family, alpha, grid_size: int) -> TransferOperator:
    """The operator M = d/dt L_t |_{t=0}: weight -(f'' a + v') / (|f'| f')."""
    base = family.base
    A = alpha.alpha

    def weight(y, tag):
        br = base.branch(tag)
        fp = br.df(y)
        if family.kind == "additive":
            vp = family.X.df(br.f(y)) * fp
        else:
            vp = (family.g.df(br.f(y)) * fp - br.d2f(y) * family.g.f(y)
                  - fp * family.g.df(y))
        return -(br.d2f(y) * A(y) + vp) / (np.abs(fp) * fp)

    return build_operator(base, weight, grid_size)
