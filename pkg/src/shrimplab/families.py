"""Scalar polynomial families whose fixed points organize stability windows.

Five families are supported:

    parabola         Ybar = M1 - Y^2
    cubic_plus       Ybar = M1 + M2*Y + Y^3
    cubic_minus      Ybar = M1 + M2*Y - Y^3
    double_parabola  Ybar = M2 - (M1 - Y^2)^2
    shrimp3          Ybar = M2 - (M1 - Y^2)^2 + M3*Y

Evaluation uses the nested form (inner parabola first) so that values and
derivative jets are bit-identical across modules.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import EscapeError

PARABOLA = "parabola"
CUBIC_PLUS = "cubic_plus"
CUBIC_MINUS = "cubic_minus"
DOUBLE_PARABOLA = "double_parabola"
SHRIMP3 = "shrimp3"

FAMILY_ARITY = {
    PARABOLA: 1,
    CUBIC_PLUS: 2,
    CUBIC_MINUS: 2,
    DOUBLE_PARABOLA: 2,
    SHRIMP3: 3,
}

DEFAULT_ESCAPE_RADIUS = 1.0e6


@dataclass(frozen=True)
class ModelMap:
    """A family name plus its parameter vector."""

    family: str
    params: tuple

    def __post_init__(self):
        if self.family not in FAMILY_ARITY:
            raise ValueError(f"unknown family '{self.family}'")
        params = tuple(float(p) for p in self.params)
        if len(params) != FAMILY_ARITY[self.family]:
            raise ValueError(
                f"{self.family} takes {FAMILY_ARITY[self.family]} parameters, "
                f"got {len(params)}"
            )
        if not all(math.isfinite(p) for p in params):
            raise ValueError("parameters must be finite")
        object.__setattr__(self, "params", params)

    def with_params(self, params) -> "ModelMap":
        return ModelMap(self.family, tuple(params))


@dataclass(frozen=True)
class Jet:
    """Value and Y-derivatives of orders 1..len(derivs) at a point."""

    value: float
    derivs: tuple


def eval_map(m: ModelMap, y: float) -> float:
    """Evaluate the family polynomial at y (nested form)."""
    if not math.isfinite(y):
        raise ValueError("state must be finite")
    p = m.params
    f = m.family
    if f == PARABOLA:
        return p[0] - y * y
    if f == CUBIC_PLUS:
        return p[0] + p[1] * y + y * y * y
    if f == CUBIC_MINUS:
        return p[0] + p[1] * y - y * y * y
    t = p[0] - y * y
    if f == DOUBLE_PARABOLA:
        return p[1] - t * t
    return p[1] - t * t + p[2] * y


def eval_jet(m: ModelMap, y: float, order: int = 4) -> Jet:
    """Exact Y-derivatives of orders 1..order (order must be in 1..4)."""
    if not 1 <= order <= 4:
        raise ValueError("jet order must be in 1..4")
    p = m.params
    f = m.family
    if f == PARABOLA:
        derivs = (-2.0 * y, -2.0, 0.0, 0.0)
    elif f in (CUBIC_PLUS, CUBIC_MINUS):
        s = 1.0 if f == CUBIC_PLUS else -1.0
        derivs = (p[1] + 3.0 * s * y * y, 6.0 * s * y, 6.0 * s, 0.0)
    else:
        t = p[0] - y * y
        m3 = p[2] if f == SHRIMP3 else 0.0
        derivs = (4.0 * t * y + m3, 4.0 * t - 8.0 * y * y, -24.0 * y, -24.0)
    return Jet(eval_map(m, y), derivs[:order])


def iterate_n(
    m: ModelMap,
    y0: float,
    n: int,
    escape_radius: float = DEFAULT_ESCAPE_RADIUS,
):
    """n-fold composition and the chain-rule product of first derivatives.

    The product is the orbit multiplier whenever the orbit is periodic.
    Raises EscapeError if the orbit leaves the escape radius.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    y = float(y0)
    prod = 1.0
    for step in range(n):
        prod *= eval_jet(m, y, 1).derivs[0]
        y = eval_map(m, y)
        if not math.isfinite(y) or abs(y) > escape_radius:
            raise EscapeError("orbit left the escape radius", step=step + 1, value=y)
    return y, prod


def poly_coefficients(m: ModelMap) -> list:
    """Coefficients [c0, c1, ...] of the family polynomial in Y.

    Exact for the integer/dyadic parameter values used in degeneracy checks.
    """
    p = m.params
    f = m.family
    if f == PARABOLA:
        return [p[0], 0.0, -1.0]
    if f == CUBIC_PLUS:
        return [p[0], p[1], 0.0, 1.0]
    if f == CUBIC_MINUS:
        return [p[0], p[1], 0.0, -1.0]
    m3 = p[2] if f == SHRIMP3 else 0.0
    return [p[1] - p[0] * p[0], m3, 2.0 * p[0], 0.0, -1.0]
