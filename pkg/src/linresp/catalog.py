"""Closed-form scalar functions on [-1, 1] with derivatives up to third order.

Everything downstream (map branches, perturbation directions, observables)
is assembled from these so that no symbolic differentiation is ever needed:
each catalog entry carries hand-written derivative evaluators.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class SmoothFunction:
    """A scalar function with derivative evaluators up to order 3.

    All evaluators are numpy-vectorized (accept and return ndarrays or
    scalars).
    """

    name: str
    f: Callable
    df: Callable
    d2f: Callable
    d3f: Callable

    def __call__(self, x):
        return self.f(x)

    def derivative(self, x, order: int = 1):
        if order == 0:
            return self.f(x)
        if order == 1:
            return self.df(x)
        if order == 2:
            return self.d2f(x)
        if order == 3:
            return self.d3f(x)
        raise ValueError("derivative order must be 0..3")


def _const(c):
    def g(x):
        return np.zeros_like(np.asarray(x, dtype=float)) + c

    return g


ZERO = SmoothFunction("zero", _const(0.0), _const(0.0), _const(0.0), _const(0.0))

ONE = SmoothFunction("one", _const(1.0), _const(0.0), _const(0.0), _const(0.0))

X = SmoothFunction(
    "x",
    lambda x: np.asarray(x, dtype=float) + 0.0,
    _const(1.0),
    _const(0.0),
    _const(0.0),
)

X2 = SmoothFunction(
    "x2",
    lambda x: np.asarray(x, dtype=float) ** 2,
    lambda x: 2.0 * np.asarray(x, dtype=float),
    _const(2.0),
    _const(0.0),
)

# (1 - x^2) / 4: the standard "bump" direction; vanishes at +-1.
BUMP = SmoothFunction(
    "bump",
    lambda x: (1.0 - np.asarray(x, dtype=float) ** 2) / 4.0,
    lambda x: -np.asarray(x, dtype=float) / 2.0,
    _const(-0.5),
    _const(0.0),
)

# x (1 - x^2) / 4: vanishes at -1, 0, 1; odd.
XBUMP = SmoothFunction(
    "xbump",
    lambda x: np.asarray(x, dtype=float) * (1.0 - np.asarray(x, dtype=float) ** 2) / 4.0,
    lambda x: (1.0 - 3.0 * np.asarray(x, dtype=float) ** 2) / 4.0,
    lambda x: -1.5 * np.asarray(x, dtype=float),
    _const(-1.5),
)

# x^2 (1 - x^2): vanishes at -1, 0, 1; even.
X2BUMP = SmoothFunction(
    "x2bump",
    lambda x: np.asarray(x, dtype=float) ** 2 * (1.0 - np.asarray(x, dtype=float) ** 2),
    lambda x: 2.0 * np.asarray(x, dtype=float) - 4.0 * np.asarray(x, dtype=float) ** 3,
    lambda x: 2.0 - 12.0 * np.asarray(x, dtype=float) ** 2,
    lambda x: -24.0 * np.asarray(x, dtype=float),
)

COSPI2 = SmoothFunction(
    "cospi2",
    lambda x: np.cos(np.pi * np.asarray(x, dtype=float) / 2.0),
    lambda x: -(np.pi / 2.0) * np.sin(np.pi * np.asarray(x, dtype=float) / 2.0),
    lambda x: -((np.pi / 2.0) ** 2) * np.cos(np.pi * np.asarray(x, dtype=float) / 2.0),
    lambda x: ((np.pi / 2.0) ** 3) * np.sin(np.pi * np.asarray(x, dtype=float) / 2.0),
)

SINPI = SmoothFunction(
    "sinpi",
    lambda x: np.sin(np.pi * np.asarray(x, dtype=float)),
    lambda x: np.pi * np.cos(np.pi * np.asarray(x, dtype=float)),
    lambda x: -(np.pi**2) * np.sin(np.pi * np.asarray(x, dtype=float)),
    lambda x: -(np.pi**3) * np.cos(np.pi * np.asarray(x, dtype=float)),
)

SIN2PI = SmoothFunction(
    "sin2pi",
    lambda x: np.sin(2.0 * np.pi * np.asarray(x, dtype=float)),
    lambda x: 2.0 * np.pi * np.cos(2.0 * np.pi * np.asarray(x, dtype=float)),
    lambda x: -((2.0 * np.pi) ** 2) * np.sin(2.0 * np.pi * np.asarray(x, dtype=float)),
    lambda x: -((2.0 * np.pi) ** 3) * np.cos(2.0 * np.pi * np.asarray(x, dtype=float)),
)


def polynomial(coeffs, name: str | None = None) -> SmoothFunction:
    """Polynomial from low-to-high coefficients, derivatives via numpy."""
    p0 = np.polynomial.Polynomial(list(coeffs))
    p1 = p0.deriv(1)
    p2 = p0.deriv(2)
    p3 = p0.deriv(3)
    return SmoothFunction(
        name or "poly",
        lambda x: p0(np.asarray(x, dtype=float)),
        lambda x: p1(np.asarray(x, dtype=float)),
        lambda x: p2(np.asarray(x, dtype=float)),
        lambda x: p3(np.asarray(x, dtype=float)),
    )


def scale(fn: SmoothFunction, c: float, name: str | None = None) -> SmoothFunction:
    return SmoothFunction(
        name or f"{c}*{fn.name}",
        lambda x: c * fn.f(x),
        lambda x: c * fn.df(x),
        lambda x: c * fn.d2f(x),
        lambda x: c * fn.d3f(x),
    )


def add(a: SmoothFunction, b: SmoothFunction, name: str | None = None) -> SmoothFunction:
    return SmoothFunction(
        name or f"{a.name}+{b.name}",
        lambda x: a.f(x) + b.f(x),
        lambda x: a.df(x) + b.df(x),
        lambda x: a.d2f(x) + b.d2f(x),
        lambda x: a.d3f(x) + b.d3f(x),
    )


_NAMED = {
    "zero": ZERO,
    "one": ONE,
    "x": X,
    "x2": X2,
    "bump": BUMP,
    "xbump": XBUMP,
    "x2bump": X2BUMP,
    "cospi2": COSPI2,
    "sinpi": SINPI,
    "sin2pi": SIN2PI,
}


def resolve(spec) -> SmoothFunction:
    """Resolve a catalog spec into a SmoothFunction.

    Accepted forms:
      - a SmoothFunction (returned unchanged)
      - a name string, e.g. "bump"
      - a dict {"name": ..., "coeffs": [...], "scale": c}
        ("poly" requires coeffs; "scale" multiplies any entry)
    """
    if isinstance(spec, SmoothFunction):
        return spec
    if isinstance(spec, str):
        if spec not in _NAMED:
            raise KeyError(f"unknown catalog function {spec!r}")
        return _NAMED[spec]
    if isinstance(spec, dict):
        name = spec.get("name")
        if name == "poly":
            fn = polynomial(spec["coeffs"])
        else:
            if name not in _NAMED:
                raise KeyError(f"unknown catalog function {name!r}")
            fn = _NAMED[name]
        c = spec.get("scale")
        if c is not None:
            fn = scale(fn, float(c))
        return fn
    raise TypeError(f"cannot resolve catalog spec {spec!r}")
