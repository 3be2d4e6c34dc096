"""Grid functions on [-1, 1] and bounded p-variation norms.

The p-variation of a finite sequence is computed exactly: for p = 1 it is
the plain sum of |increments|; for p > 1 the sequence is first reduced to
its local extrema (interior non-extremal points are never selected by an
optimal subset, by an exchange argument) and then a quadratic-time dynamic
program maximizes sum |x_{i_{k+1}} - x_{i_k}|^p over increasing index
subsequences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class GridFunction:
    """Real function on the uniform grid x_i = -1 + 2i/M, i = 0..M.

    interpolation is "linear" or "constant".  jump_tags lists node indices
    where the function is declared discontinuous: interpolation is not
    applied across a tagged node (the adjacent cells use one-sided constant
    extension toward the tagged node instead).
    """

    values: np.ndarray
    interpolation: str = "linear"
    jump_tags: tuple = ()

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("values must be a 1-d array with at least 2 nodes")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid values must be finite")
        if self.interpolation not in ("linear", "constant"):
            raise ValueError(f"unknown interpolation {self.interpolation!r}")

    @property
    def grid_size(self) -> int:
        return self.values.size - 1

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(-1.0, 1.0, self.values.size)

    @property
    def h(self) -> float:
        return 2.0 / self.grid_size

    @classmethod
    def from_callable(cls, fn: Callable, grid_size: int, **kw) -> "GridFunction":
        xs = np.linspace(-1.0, 1.0, grid_size + 1)
        return cls(np.asarray(fn(xs), dtype=float) + np.zeros(grid_size + 1), **kw)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        xf = np.atleast_1d(x)
        M = self.grid_size
        pos = np.clip((xf + 1.0) / self.h, 0.0, float(M))
        j = np.minimum(pos.astype(int), M - 1)
        frac = pos - j
        if self.interpolation == "constant":
            out = self.values[np.where(frac < 0.5, j, j + 1)]
        else:
            out = (1.0 - frac) * self.values[j] + frac * self.values[j + 1]
            # one-sided constant extension into cells adjacent to a tagged jump
            for k in self.jump_tags:
                if k > 0:
                    sel = (j == k - 1) & (frac > 0.0) & (frac < 1.0)
                    out = np.where(sel, self.values[k - 1], out)
                if k < M:
                    sel = (j == k) & (frac > 0.0) & (frac < 1.0)
                    out = np.where(sel, self.values[k + 1], out)
        return float(out[0]) if scalar else out

    def quadrature(self) -> float:
        """Trapezoid integral over [-1, 1]."""
        v = self.values
        return float(self.h * (v.sum() - 0.5 * (v[0] + v[-1])))

    def with_values(self, values) -> "GridFunction":
        return GridFunction(values, self.interpolation, self.jump_tags)


def quadrature_weights(grid_size: int) -> np.ndarray:
    w = np.full(grid_size + 1, 2.0 / grid_size)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def _local_extrema(values: np.ndarray) -> np.ndarray:
    """Subsequence of values keeping endpoints and direction changes."""
    v = np.asarray(values, dtype=float)
    if v.size <= 2:
        return v
    # drop repeated consecutive values first
    keep = np.concatenate(([True], np.diff(v) != 0.0))
    v = v[keep]
    if v.size <= 2:
        return v
    d = np.diff(v)
    turn = np.sign(d[1:]) != np.sign(d[:-1])
    mask = np.concatenate(([True], turn, [True]))
    return v[mask]


def var_p(values, p: float) -> float:
    """Exact p-variation sup over ordered subsets: (max sum |Delta|^p)^(1/p)."""
    if p < 1.0:
        raise ValueError("p must be >= 1")
    v = np.asarray(values, dtype=float)
    if v.size <= 1:
        return 0.0
    if p == 1.0:
        return float(np.sum(np.abs(np.diff(v))))
    w = _local_extrema(v)
    n = w.size
    if n <= 1:
        return 0.0
    best = np.zeros(n)
    for j in range(1, n):
        best[j] = np.max(best[:j] + np.abs(w[j] - w[:j]) ** p)
    return float(np.max(best) ** (1.0 / p))


def var_p_bruteforce(values, p: float) -> float:
    """Exhaustive reference over all ordered subsets (n <= ~16 only)."""
    if p < 1.0:
        raise ValueError("p must be >= 1")
    v = np.asarray(values, dtype=float)
    n = v.size
    if n <= 1:
        return 0.0
    best = 0.0
    for mask in range(1, 1 << n):
        idx = [i for i in range(n) if mask >> i & 1]
        if len(idx) < 2:
            continue
        s = sum(abs(v[idx[k + 1]] - v[idx[k]]) ** p for k in range(len(idx) - 1))
        best = max(best, s)
    return best ** (1.0 / p)


def bvp_norm(u: GridFunction, p: float) -> float:
    """BV_p norm: var_p of the node values extended by 0 outside [-1, 1]."""
    seq = np.concatenate(([0.0], u.values, [0.0]))
    return var_p(seq, p)


def sup_norm(u: GridFunction) -> float:
    return float(np.max(np.abs(u.values)))
