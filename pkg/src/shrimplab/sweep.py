"""Parameter-plane rasterization of attractor type.

Each cell of an (nx, ny) grid gets one outcome: a detected minimal period, a
chaotic label with its Lyapunov exponent, or escape.  All cells iterate the
same vectorized update, so the outcome of a cell never depends on how the
grid is chunked across workers; parallel sweeps are byte-identical to serial
ones.

Classification per cell: discard a transient, look for a recurrence of
minimal period p <= max_period (confirmed twice at tolerance period_tol) with
an attracting cycle multiplier, otherwise measure the average log-derivative
over `samples` iterations and call the cell chaotic when it is positive.
Orbits that park exactly on a repelling cycle (it happens: the critical
orbit of the full-height parabola lands on its fixed point in floating
point) are nudged once by 1e-9 and re-classified.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NumericalError
from .families import (
    CUBIC_MINUS,
    CUBIC_PLUS,
    DOUBLE_PARABOLA,
    FAMILY_ARITY,
    PARABOLA,
    SHRIMP3,
    ModelMap,
)
from .rescale import rescale_frame
from .returnmap import ReturnMapConfig

KIND_PERIOD = "period"
KIND_CHAOTIC = "chaotic"
KIND_ESCAPED = "escaped"

_CODE = {KIND_PERIOD: 1, KIND_CHAOTIC: 2, KIND_ESCAPED: 3}
_KIND = {v: k for k, v in _CODE.items()}

_PARAM_NAMES = {"M1": 0, "M2": 1, "M3": 2, "dummy": -1}


@dataclass(frozen=True)
class CellOutcome:
    kind: str
    period: int = 0
    lyap: float = 0.0


@dataclass(frozen=True)
class PlaneSpec:
    x_name: str
    x_lo: float
    x_hi: float
    y_name: str
    y_lo: float
    y_hi: float

    def x_values(self, nx):
        return np.linspace(self.x_lo, self.x_hi, nx)

    def y_values(self, ny):
        return np.linspace(self.y_lo, self.y_hi, ny)


class FamilyPlaneTarget:
    """Sweep target: a polynomial family with two of its parameters swept.

    The axis name 'dummy' is accepted for one-parameter families: the swept
    value is simply ignored, giving parameter-line sweeps a second axis.
    """

    def __init__(self, template: ModelMap, x_name: str, y_name: str):
        arity = FAMILY_ARITY[template.family]
        for name in (x_name, y_name):
            if name not in _PARAM_NAMES or _PARAM_NAMES[name] >= arity:
                raise ValueError(f"{template.family} has no parameter {name}")
        self.template = template
        self.ix = _PARAM_NAMES[x_name]
        self.iy = _PARAM_NAMES[y_name]

    def maps(self, p1, p2):
        base = self.template.params
        P = [np.full_like(p1, v) for v in base]
        if self.ix >= 0:
            P[self.ix] = p1
        if self.iy >= 0:
            P[self.iy] = p2
        fam = self.template.family

        if fam == PARABOLA:
            f = lambda y: P[0] - y * y
            df = lambda y: -2.0 * y
        elif fam in (CUBIC_PLUS, CUBIC_MINUS):
            s = 1.0 if fam == CUBIC_PLUS else -1.0
            f = lambda y: P[0] + P[1] * y + s * y * y * y
            df = lambda y: P[1] + 3.0 * s * y * y
        elif fam == DOUBLE_PARABOLA:
            f = lambda y: P[1] - (P[0] - y * y) ** 2
            df = lambda y: 4.0 * y * (P[0] - y * y)
        elif fam == SHRIMP3:
            f = lambda y: P[1] - (P[0] - y * y) ** 2 + P[2] * y
            df = lambda y: 4.0 * y * (P[0] - y * y) + P[2]
        else:
            raise NumericalError(f"no vector maps for family {fam}")
        return f, df

    def meta(self):
        return {
            "target": "family",
            "family": self.template.family,
            "params": ",".join(f"{p:.17g}" for p in self.template.params),
        }


class RescaledPlaneTarget:
    """Sweep target: the rescaled double-round map on its (M1, M2) plane.

    The cross coordinate is the dynamical variable; the leading state is held
    at the chart center.  Only the linear saddle model is vectorized.
    """

    def __init__(self, cfg: ReturnMapConfig):
        if cfg.local.kind != "saddle" or cfg.local.nonlinearity != "linear":
            raise NumericalError("rescaled sweeps support the linear saddle model")
        self.cfg = cfg

    def maps(self, m1, m2):
        cfg = self.cfg
        frame = rescale_frame(cfg)
        oc = cfg if cfg.ordering == "k_ge_m" else cfg.swapped()
        t1, t2, local = oc.t1, oc.t2, oc.local
        gamma = local.gamma
        lead_k = local.leading_power(oc.k)
        lead_m = local.leading_power(oc.m)
        mu1 = frame.mu1_center + m1 / frame.m1_scale
        mu2 = frame.mu2_center + m2 / frame.m2_scale
        x02 = frame.center_x2
        x11 = lead_k * x02
        x01 = t1.x_plus + t1.a * x11

        def f(y):
            y11 = frame.center_y1 + frame.beta1 * y
            y01 = mu1 + t1.c * x11 + t1.d * (y11 - t1.y_minus) ** 2
            y12 = gamma**oc.m * y01
            x12 = lead_m * (x01 + t1.b * (y11 - t1.y_minus))
            yb = mu2 + t2.c * x12 + t2.d * (y12 - t2.y_minus) ** 2
            return (gamma**oc.k * yb - frame.center_y1) / frame.beta1

        def df(y, h=1.0e-6):
            return (f(y + h) - f(y - h)) / (2.0 * h)

        return f, df

    def meta(self):
        oc = self.cfg
        return {
            "target": "rescaled_return",
            "k": str(oc.k),
            "m": str(oc.m),
            "lambda": f"{oc.local.lam:.17g}",
            "gamma": f"{oc.local.gamma:.17g}",
        }


@dataclass(frozen=True)
class SweepSpec:
    target: object
    plane: PlaneSpec
    nx: int
    ny: int
    transient: int = 1024
    max_period: int = 20
    samples: int = 4096
    escape_radius: float = 1.0e6
    seed_rule: str = "critical"
    seed_value: float = 0.0
    period_tol: float = 1.0e-6

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValueError("resolution must be at least 2x2")
        if self.transient < 1 or self.max_period < 1:
            raise ValueError("transient and max_period must be >= 1")
        if self.escape_radius <= 0.0:
            raise ValueError("escape_radius must be positive")
        if self.seed_rule not in ("critical", "fixed"):
            raise ValueError("seed_rule must be 'critical' or 'fixed'")

    def seed(self) -> float:
        return 0.0 if self.seed_rule == "critical" else self.seed_value


@dataclass(frozen=True)
class SweepGrid:
    spec: SweepSpec
    kind: np.ndarray
    period: np.ndarray
    lyap: np.ndarray

    def outcome(self, i: int, j: int) -> CellOutcome:
        code = int(self.kind[i, j])
        return CellOutcome(
            kind=_KIND[code], period=int(self.period[i, j]), lyap=float(self.lyap[i, j])
        )

    def same_cells(self, other: "SweepGrid") -> bool:
        return (
            np.array_equal(self.kind, other.kind)
            and np.array_equal(self.period, other.period)
            and np.array_equal(self.lyap, other.lyap)
        )


def _iterate_window(f, y, esc, radius, length):
    S = np.empty((length, y.size))
    S[0] = y
    for t in range(1, length):
        y = f(y)
        bad = ~np.isfinite(y) | (np.abs(y) > radius)
        esc |= bad
        y = np.where(esc, 0.0, y)
        S[t] = y
    return S, y, esc


def _run_transient(f, y, esc, radius, steps):
    for _ in range(steps):
        y = f(y)
        bad = ~np.isfinite(y) | (np.abs(y) > radius)
        esc |= bad
        y = np.where(esc, 0.0, y)
    return y, esc


def _newton_orbit(f, df, y0, d, iterations=12):
    """Vectorized Newton on the d-fold fixed-point equation from seeds y0.

    Returns (root, residual, multiplier); non-converging entries keep their
    last iterate and a large residual.
    """
    y = y0.copy()
    for _ in range(iterations):
        v = y.copy()
        dp = np.ones_like(y)
        for _ in range(d):
            dp = dp * df(v)
            v = f(v)
        g = v - y
        gp = dp - 1.0
        safe = np.abs(gp) > 1.0e-14
        step = np.where(safe, g / np.where(safe, gp, 1.0), 0.0)
        y = y - step
        y = np.where(np.isfinite(y), y, y0)
    v = y.copy()
    dp = np.ones_like(y)
    for _ in range(d):
        dp = dp * df(v)
        v = f(v)
    return y, np.abs(v - y), dp


def _detect_periods(S, f, df, open_mask, tol, max_period):
    """Classify cells by minimal period.

    A confirmed recurrence of period p only nominates a candidate; the label
    is the smallest divisor d of p whose Newton-refined d-cycle through the
    orbit is attracting.  This keeps slowly converging orbits near flips from
    masquerading as double-period cycles (their alternating tails recur at
    period 2 long before they settle).
    """
    n = S.shape[1]
    candidate = np.zeros(n, dtype=np.int32)
    for p in range(1, max_period + 1):
        rec = (
            (np.abs(S[p] - S[0]) < tol)
            & (np.abs(S[2 * p] - S[p]) < tol)
            & open_mask
            & (candidate == 0)
        )
        candidate[rec] = p
    period = np.zeros(n, dtype=np.int32)
    for d in range(1, max_period + 1):
        need = (candidate > 0) & (candidate % d == 0) & (period == 0)
        if not need.any():
            continue
        root, resid, mult = _newton_orbit(f, df, S[0], d)
        spread = np.abs(S[d] - S[0])
        good = (
            need
            & (resid < 1.0e-10 * (1.0 + np.abs(root)))
            & (np.abs(mult) < 1.0)
            & (np.abs(root - S[0]) < 0.5 + 2.0 * spread)
        )
        period[good] = d
    parked = (candidate > 0) & (period == 0)
    return period, parked


def _lyapunov(f, df, y, esc, radius, samples):
    acc = np.zeros(y.size)
    for _ in range(samples):
        d = np.abs(df(y))
        acc += np.log(np.maximum(d, 1.0e-15))
        y = f(y)
        bad = ~np.isfinite(y) | (np.abs(y) > radius)
        esc |= bad
        y = np.where(esc, 0.0, y)
    return acc / samples, y, esc


def _relaxed_period(S, open_mask, max_period, tol=1.0e-3):
    """Best-recurrence fallback for cells that defeated both detectors."""
    n = S.shape[1]
    period = np.zeros(n, dtype=np.int32)
    best = np.full(n, np.inf)
    for p in range(1, max_period + 1):
        err = np.maximum(np.abs(S[p] - S[0]), np.abs(S[2 * p] - S[p]))
        take = open_mask & (err < best) & (err < tol)
        period[take] = p
        best = np.where(take, err, best)
    return period


def _scan_cells(spec: SweepSpec, p1: np.ndarray, p2: np.ndarray):
    f, df = spec.target.maps(p1, p2)
    n = p1.size
    radius = spec.escape_radius
    window = 2 * spec.max_period + 1
    kind = np.zeros(n, dtype=np.uint8)
    period = np.zeros(n, dtype=np.int32)
    lyap = np.zeros(n)

    with np.errstate(over="ignore", invalid="ignore"):
        y = np.full(n, spec.seed())
        esc = np.zeros(n, dtype=bool)
        y, esc = _run_transient(f, y, esc, radius, spec.transient)
        S, y, esc = _iterate_window(f, y, esc, radius, window)
        per, parked = _detect_periods(S, f, df, ~esc, spec.period_tol, spec.max_period)
        kind[per > 0] = _CODE[KIND_PERIOD]
        period[:] = per

        if parked.any():
            yp = S[0] + np.where(parked, 1.0e-9, 0.0)
            yp, esc = _run_transient(f, yp, esc, radius, spec.transient)
            S2, yp, esc = _iterate_window(f, yp, esc, radius, window)
            open2 = parked & ~esc
            per2, _ = _detect_periods(S2, f, df, open2, spec.period_tol, spec.max_period)
            newly = per2 > 0
            kind[newly] = _CODE[KIND_PERIOD]
            period[newly] = per2[newly]
            S = np.where(parked[None, :], S2, S)
            y = np.where(parked, yp, y)

        kind[esc] = _CODE[KIND_ESCAPED]
        period[esc] = 0

        active = kind == 0
        if active.any():
            lam, y, esc2 = _lyapunov(f, df, y, esc.copy(), radius, spec.samples)
            newly_escaped = esc2 & ~esc & active
            kind[newly_escaped] = _CODE[KIND_ESCAPED]
            active &= ~newly_escaped
            chaotic = active & (lam > 0.0)
            kind[chaotic] = _CODE[KIND_CHAOTIC]
            lyap[chaotic] = lam[chaotic]
            leftover = active & ~chaotic
            if leftover.any():
                per3 = _relaxed_period(S, leftover, spec.max_period)
                settled = leftover & (per3 > 0)
                kind[settled] = _CODE[KIND_PERIOD]
                period[settled] = per3[settled]
                stray = leftover & ~settled
                kind[stray] = _CODE[KIND_CHAOTIC]
                lyap[stray] = lam[stray]
    return kind, period, lyap


def attractor_scan(target, point, spec: SweepSpec) -> CellOutcome:
    """Classify a single parameter point with the sweep machinery."""
    spec = replace(spec, target=target)
    p1 = np.array([float(point[0])])
    p2 = np.array([float(point[1])])
    kind, period, lyap = _scan_cells(spec, p1, p2)
    return CellOutcome(kind=_KIND[int(kind[0])], period=int(period[0]), lyap=float(lyap[0]))


def _sweep_rows(spec: SweepSpec, j_lo: int, j_hi: int):
    xs = spec.plane.x_values(spec.nx)
    ys = spec.plane.y_values(spec.ny)
    p1, p2 = np.meshgrid(xs, ys[j_lo:j_hi], indexing="ij")
    kind, period, lyap = _scan_cells(spec, p1.ravel(), p2.ravel())
    shape = (spec.nx, j_hi - j_lo)
    return kind.reshape(shape), period.reshape(shape), lyap.reshape(shape)


def plane_sweep(spec: SweepSpec, workers: int = 1) -> SweepGrid:
    """Rasterize the plane; output is identical for any worker count."""
    kind = np.zeros((spec.nx, spec.ny), dtype=np.uint8)
    period = np.zeros((spec.nx, spec.ny), dtype=np.int32)
    lyap = np.zeros((spec.nx, spec.ny))
    if workers <= 1:
        k, p, l = _sweep_rows(spec, 0, spec.ny)
        return SweepGrid(spec=spec, kind=k, period=p, lyap=l)
    chunk = max(1, math.ceil(spec.ny / workers))
    bounds = [(j, min(j + chunk, spec.ny)) for j in range(0, spec.ny, chunk)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = pool.map(_sweep_chunk, [(spec, lo, hi) for lo, hi in bounds])
        for (lo, hi), (k, p, l) in zip(bounds, results):
            kind[:, lo:hi] = k
            period[:, lo:hi] = p
            lyap[:, lo:hi] = l
    return SweepGrid(spec=spec, kind=kind, period=period, lyap=lyap)


def _sweep_chunk(args):
    spec, lo, hi = args
    return _sweep_rows(spec, lo, hi)


@dataclass(frozen=True)
class GridComponent:
    period: int
    cell_count: int
    bbox: tuple
    cells: tuple


def shrimp_locate(grid: SweepGrid, period: int):
    """4-connected components of cells carrying the given period."""
    mask = (grid.kind == _CODE[KIND_PERIOD]) & (grid.period == period)
    seen = np.zeros_like(mask, dtype=bool)
    nx, ny = mask.shape
    components = []
    for i in range(nx):
        for j in range(ny):
            if not mask[i, j] or seen[i, j]:
                continue
            stack = [(i, j)]
            seen[i, j] = True
            cells = []
            while stack:
                a, b = stack.pop()
                cells.append((a, b))
                for da, db in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    na, nb = a + da, b + db
                    if 0 <= na < nx and 0 <= nb < ny and mask[na, nb] and not seen[na, nb]:
                        seen[na, nb] = True
                        stack.append((na, nb))
            arr = np.array(cells)
            bbox = (
                int(arr[:, 0].min()),
                int(arr[:, 0].max()),
                int(arr[:, 1].min()),
                int(arr[:, 1].max()),
            )
            components.append(
                GridComponent(
                    period=period,
                    cell_count=len(cells),
                    bbox=bbox,
                    cells=tuple(map(tuple, cells)),
                )
            )
    components.sort(key=lambda c: -c.cell_count)
    return components
