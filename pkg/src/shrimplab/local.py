"""Local dynamics near the saddle: linear normal form plus a test nonlinearity.

The local map acts on (x, y) with x the leading stable coordinate(s) and y the
one-dimensional unstable coordinate.  For a saddle x is a scalar and the
linear part is diag(sign*lam, gamma); for a saddle-focus x is a 2-vector and
the stable block is lam times a rotation by phi.  The optional test
nonlinearity adds g = x^2*y to the stable row and h = x*y^2 to the unstable
row (saddle only); these terms vanish identically on both invariant axes
together with the required partial derivatives, so the axes x=0 and y=0 stay
invariant and the map restricted to them stays linear.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, EscapeError

SADDLE = "saddle"
SADDLE_FOCUS = "saddle_focus"
LINEAR = "linear"
TEST_CUBIC = "test_cubic"


def _check_cubic_identities():
    """Sampled check that the test nonlinearity respects the invariant axes."""
    g = lambda x, y: x * x * y
    h = lambda x, y: x * y * y
    dg_dx = lambda x, y: 2.0 * x * y
    dh_dy = lambda x, y: 2.0 * x * y
    for s in (-0.7, 0.3, 1.1):
        assert g(s, 0.0) == 0.0 and g(0.0, s) == 0.0
        assert h(s, 0.0) == 0.0 and h(0.0, s) == 0.0
        assert dg_dx(0.0, s) == 0.0
        assert dh_dy(s, 0.0) == 0.0


@dataclass(frozen=True)
class LocalNormalForm:
    """Saddle or saddle-focus local map in straightened coordinates."""

    kind: str
    lam: float
    gamma: float
    phi: float = 0.0
    sign_lambda: int = 1
    nonlinearity: str = LINEAR

    def __post_init__(self):
        if self.kind not in (SADDLE, SADDLE_FOCUS):
            raise ValueError(f"unknown local kind '{self.kind}'")
        if not 0.0 < self.lam < 1.0:
            raise ValueError("lam must lie in (0, 1)")
        if not abs(self.gamma) > 1.0:
            raise ValueError("|gamma| must exceed 1")
        if not self.lam * abs(self.gamma) < 1.0:
            raise ValueError("strong dissipativity requires lam*|gamma| < 1")
        if self.kind == SADDLE_FOCUS and not 0.0 < self.phi < math.pi:
            raise ValueError("phi must lie in (0, pi) for a saddle-focus")
        if self.sign_lambda not in (-1, 1):
            raise ValueError("sign_lambda must be +1 or -1")
        if self.nonlinearity not in (LINEAR, TEST_CUBIC):
            raise ValueError(f"unknown nonlinearity '{self.nonlinearity}'")
        if self.nonlinearity == TEST_CUBIC and self.kind != SADDLE:
            raise ValueError("test_cubic nonlinearity is defined for the saddle form")
        if self.nonlinearity == TEST_CUBIC:
            _check_cubic_identities()

    @property
    def x_dim(self) -> int:
        return 1 if self.kind == SADDLE else 2

    def leading_multiplier(self):
        """Signed lam (saddle) or lam*R(phi) (saddle-focus)."""
        if self.kind == SADDLE:
            return self.sign_lambda * self.lam
        c, s = math.cos(self.phi), math.sin(self.phi)
        return self.lam * np.array([[c, -s], [s, c]])

    def leading_power(self, n: int):
        """n-th power of the leading stable block."""
        if self.kind == SADDLE:
            return (self.sign_lambda * self.lam) ** n
        c, s = math.cos(n * self.phi), math.sin(n * self.phi)
        return self.lam**n * np.array([[c, -s], [s, c]])


def theta_modulus(local: LocalNormalForm) -> float:
    """Saddle value -ln(lam)/ln|gamma|; exceeds 1 under strong dissipativity."""
    return -math.log(local.lam) / math.log(abs(local.gamma))


def expansion_gain(local: LocalNormalForm, k: int, m: int) -> float:
    """Composite gain lam^m * |gamma|^k of a double round with (k, m) local passes."""
    return local.lam**m * abs(local.gamma) ** k


def in_ratio_window(k: int, m: int, theta: float, delta: float) -> bool:
    """True when (theta+delta)^-1 < m/k < theta - delta."""
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    r = m / k
    return 1.0 / (theta + delta) < r < theta - delta


def local_apply(local: LocalNormalForm, x, y):
    """One application of the local map."""
    a = local.leading_multiplier()
    if local.kind == SADDLE_FOCUS:
        return a @ np.asarray(x, dtype=float), local.gamma * y
    if local.nonlinearity == LINEAR:
        return a * x, local.gamma * y
    return a * x + x * x * y, local.gamma * y + x * y * y


def local_iterate(
    local: LocalNormalForm,
    x,
    y,
    n: int,
    escape_radius: float = 1.0e6,
):
    """n-fold forward application; exact powers in the linear case."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return x, y
    if local.nonlinearity == LINEAR:
        a = local.leading_power(n)
        yn = local.gamma**n * y
        if abs(yn) > escape_radius:
            raise EscapeError("local orbit left the escape radius", step=n, value=yn)
        if local.kind == SADDLE_FOCUS:
            return a @ np.asarray(x, dtype=float), yn
        return a * x, yn
    xc, yc = float(x), float(y)
    for step in range(n):
        xc, yc = local_apply(local, xc, yc)
        if max(abs(xc), abs(yc)) > escape_radius:
            raise EscapeError(
                "local orbit left the escape radius", step=step + 1, value=(xc, yc)
            )
    return xc, yc


def cross_form_solve(
    local: LocalNormalForm,
    x0,
    yk: float,
    k: int,
    tol: float = 1.0e-12,
    max_sweeps: int = 200,
    damping: float = 0.8,
):
    """Solve the two-point problem: given x at time 0 and y at time k, return
    (x at time k, y at time 0) for the k-fold local map.

    Linear case is closed form.  The test-cubic case runs a damped sweep
    iteration (forward in x, backward in y) that contracts for large k; it
    raises ConvergenceError when k is too small for contraction.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if local.nonlinearity == LINEAR:
        a = local.leading_power(k)
        if local.kind == SADDLE_FOCUS:
            return a @ np.asarray(x0, dtype=float), yk / local.gamma**k
        return a * x0, yk / local.gamma**k

    lam_s = local.sign_lambda * local.lam
    gam = local.gamma
    xs = np.array([lam_s**j * x0 for j in range(k + 1)], dtype=float)
    ys = np.array([gam ** (j - k) * yk for j in range(k + 1)], dtype=float)
    ys[k] = yk
    for _ in range(max_sweeps):
        resid = 0.0
        for j in range(k):
            xs[j + 1] = lam_s * xs[j] + xs[j] * xs[j] * ys[j]
        for j in range(k - 1, -1, -1):
            denom = gam + xs[j] * ys[j]
            if denom == 0.0:
                raise ConvergenceError("cross-form sweep hit a singular step")
            upd = ys[j + 1] / denom
            ys[j] = (1.0 - damping) * ys[j] + damping * upd
        for j in range(k):
            rx = xs[j + 1] - (lam_s * xs[j] + xs[j] * xs[j] * ys[j])
            ry = ys[j + 1] - (gam * ys[j] + xs[j] * ys[j] * ys[j])
            resid = max(resid, abs(rx), abs(ry))
        if resid <= tol:
            return float(xs[k]), float(ys[0])
    raise ConvergenceError(
        f"cross-form iteration did not reach {tol:g} in {max_sweeps} sweeps "
        f"(k={k} may be too small for contraction)"
    )
