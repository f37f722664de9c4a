"""Excursion (global) maps along the two homoclinic loops.

Each map carries the Taylor data of one excursion from the unstable-axis
neighborhood back to the stable-side neighborhood:

    xbar = x_plus + a x + b (y - y_minus)
    ybar = mu + c x + d (y - y_minus)^2

with d != 0 (quadratic fold in y) and nonzero b, c.  The maps are exactly
these polynomials: no hidden higher-order terms.  For a saddle all
coefficients are scalars; for a saddle-focus x is a 2-vector, a is 2x2, and
b, c are 2-vectors.  Slots for non-leading directions (p, q, a_tilde,
b_tilde) exist for interface completeness but must stay zero at the
supported phase-space dimensions, where there are no non-leading directions.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


def _norm(v) -> float:
    return float(np.linalg.norm(np.atleast_1d(np.asarray(v, dtype=float))))


@dataclass(frozen=True)
class GlobalMapTaylor:
    """Taylor data of one excursion map; mu is its splitting parameter."""

    x_plus: object
    y_minus: float
    a: object
    b: object
    c: object
    d: float
    mu: float = 0.0
    p: object = 0.0
    q: object = 0.0
    a_tilde: object = 0.0
    b_tilde: object = 0.0

    def __post_init__(self):
        if self.d == 0.0:
            raise ValueError("d must be nonzero (quadratic fold)")
        if _norm(self.b) == 0.0:
            raise ValueError("b must be nonzero")
        if _norm(self.c) == 0.0:
            raise ValueError("c must be nonzero")
        for name in ("p", "q", "a_tilde", "b_tilde"):
            if _norm(getattr(self, name)) != 0.0:
                raise ValueError(
                    f"{name} must be zero: no non-leading directions at the "
                    "supported dimensions"
                )

    @property
    def x_dim(self) -> int:
        return np.atleast_1d(np.asarray(self.x_plus, dtype=float)).size

    def with_mu(self, mu: float) -> "GlobalMapTaylor":
        return replace(self, mu=float(mu))


def apply_global(g: GlobalMapTaylor, x, y):
    """Apply the excursion map to a point (x, y) near the unstable axis."""
    dy = y - g.y_minus
    if g.x_dim == 1:
        xbar = g.x_plus + g.a * x + g.b * dy
        ybar = g.mu + g.c * x + g.d * dy * dy
        return xbar, ybar
    xv = np.asarray(x, dtype=float)
    xbar = np.asarray(g.x_plus, dtype=float) + np.asarray(g.a, dtype=float) @ xv
    xbar = xbar + np.asarray(g.b, dtype=float) * dy
    ybar = g.mu + float(np.asarray(g.c, dtype=float) @ xv) + g.d * dy * dy
    return xbar, ybar


def saddle_global(
    x_plus=1.0, y_minus=1.0, a=0.0, b=1.0, c=1.0, d=1.0, mu=0.0
) -> GlobalMapTaylor:
    """Scalar-coefficient excursion map for the 2D saddle model."""
    return GlobalMapTaylor(
        x_plus=float(x_plus), y_minus=float(y_minus), a=float(a),
        b=float(b), c=float(c), d=float(d), mu=float(mu),
    )


def focus_global(x_plus, y_minus, a, b, c, d, mu=0.0) -> GlobalMapTaylor:
    """Vector-coefficient excursion map for the 3D saddle-focus model."""
    return GlobalMapTaylor(
        x_plus=np.asarray(x_plus, dtype=float),
        y_minus=float(y_minus),
        a=np.asarray(a, dtype=float),
        b=np.asarray(b, dtype=float),
        c=np.asarray(c, dtype=float),
        d=float(d),
        mu=float(mu),
    )
