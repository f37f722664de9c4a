"""Plain-text run configuration: one `section.key = value` per line.

Blank lines and `#` comments are ignored.  Values are plain scalars,
comma-separated vectors (`b = 1,0.5`), or semicolon-separated matrix rows
(`a = 0,0;0,0`).  Every key of the benchmark model has a default, so a run
config only states what it overrides; `--set section.key=value` overrides
files.  The full schema is documented in the README.
"""
from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .families import FAMILY_ARITY, ModelMap
from .global_map import GlobalMapTaylor, focus_global, saddle_global
from .local import SADDLE, SADDLE_FOCUS, LocalNormalForm
from .returnmap import ReturnMapConfig
from .sweep import (
    FamilyPlaneTarget,
    PlaneSpec,
    RescaledPlaneTarget,
    SweepSpec,
)

BENCHMARK_DEFAULTS = {
    "local.kind": "saddle",
    "local.lambda": "0.4",
    "local.gamma": "2.0",
    "local.phi": "0.3",
    "local.sign_lambda": "1",
    "local.nonlinearity": "linear",
    "t1.x_plus": "1.0",
    "t1.y_minus": "1.0",
    "t1.a": "0.0",
    "t1.b": "1.0",
    "t1.c": "1.0",
    "t1.d": "1.0",
    "t1.mu": "0.0",
    "t2.x_plus": "1.0",
    "t2.y_minus": "1.0",
    "t2.a": "0.0",
    "t2.b": "1.0",
    "t2.c": "1.0",
    "t2.d": "1.0",
    "t2.mu": "0.0",
    "return.k": "8",
    "return.m": "8",
    "model.family": "double_parabola",
    "model.params": "0,0",
    "plane.x_name": "M1",
    "plane.x_lo": "-1.0",
    "plane.x_hi": "1.0",
    "plane.y_name": "M2",
    "plane.y_lo": "-1.0",
    "plane.y_hi": "1.0",
    "sweep.nx": "128",
    "sweep.ny": "128",
    "sweep.transient": "1024",
    "sweep.max_period": "20",
    "sweep.samples": "4096",
    "sweep.escape_radius": "1e6",
    "sweep.seed_rule": "critical",
    "sweep.seed_value": "0.0",
    "sweep.period_tol": "1e-6",
    "sweep.target": "family",
    "continue.period": "1",
    "continue.kind": "SN",
    "continue.y_guess": "0.5",
    "continue.param_guess": "0.75",
    "continue.free_param": "0",
    "continue.step": "0.01",
    "continue.max_points": "400",
    "continue.bounds": "10.0",
    "rescale.ks": "6,8,10,12,14",
    "rescale.radius": "2.0",
    "rescale.grid": "13",
    "plan.kind": "saddle",
    "plan.theta0": "1.25",
    "plan.phi0": "1.0",
    "plan.gamma": "128.0",
    "plan.lambda": "0.4",
    "plan.amplitude": "1.0",
    "plan.count": "45",
    "predict.ks": "8,10,12",
    "predict.m1": "0.0",
    "predict.m2": "0.0",
}

_SADDLE_FOCUS_VECTOR_DEFAULTS = {
    "t1.x_plus": "1.0,0.5",
    "t1.a": "0,0;0,0",
    "t1.b": "1.0,0.5",
    "t1.c": "1.0,-0.5",
    "t2.x_plus": "1.0,0.5",
    "t2.a": "0,0;0,0",
    "t2.b": "1.0,0.5",
    "t2.c": "1.0,-0.5",
}


def parse_config_lines(text: str, source: str = "<config>"):
    """Parse `section.key = value` lines; returns (values, line numbers)."""
    out = {}
    lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'section.key = value' in {source}", line=lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.split("#", 1)[0].strip()
        if "." not in key:
            raise ConfigError(
                f"key must be section.key in {source}", key=key, line=lineno
            )
        if not value:
            raise ConfigError(f"empty value in {source}", key=key, line=lineno)
        out[key] = value
        lines[key] = lineno
    return out, lines


def parse_config_text(text: str, source: str = "<config>") -> dict:
    return parse_config_lines(text, source)[0]


def load_config(path=None, overrides=()) -> dict:
    """Defaults, then the config file, then key=value overrides."""
    file_cfg, file_lines = {}, {}
    if path is not None:
        try:
            with open(path) as fh:
                file_cfg, file_lines = parse_config_lines(fh.read(), source=str(path))
        except OSError as err:
            raise ConfigError(f"cannot read config: {err}", key=str(path)) from err
    override_cfg = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError("override must be key=value", key=item)
        key, _, value = item.partition("=")
        key, value = key.strip(), value.strip()
        if "." not in key or not value:
            raise ConfigError("override must be section.key=value", key=item)
        override_cfg[key] = value

    cfg = dict(BENCHMARK_DEFAULTS)
    kind = override_cfg.get(
        "local.kind", file_cfg.get("local.kind", cfg["local.kind"])
    )
    if kind == SADDLE_FOCUS:
        cfg.update(_SADDLE_FOCUS_VECTOR_DEFAULTS)
    cfg.update(file_cfg)
    cfg.update(override_cfg)
    known = set(BENCHMARK_DEFAULTS) | set(_SADDLE_FOCUS_VECTOR_DEFAULTS)
    for key in sorted(set(cfg) - known):
        raise ConfigError("unknown key", key=key, line=file_lines.get(key))
    return cfg


def _get_float(cfg, key):
    try:
        return float(cfg[key])
    except ValueError as err:
        raise ConfigError(f"not a number: '{cfg[key]}'", key=key) from err


def _get_int(cfg, key):
    try:
        return int(cfg[key])
    except ValueError as err:
        raise ConfigError(f"not an integer: '{cfg[key]}'", key=key) from err


def _get_vector(cfg, key):
    try:
        return np.array([float(v) for v in cfg[key].split(",")])
    except ValueError as err:
        raise ConfigError(f"not a vector: '{cfg[key]}'", key=key) from err


def _get_matrix(cfg, key):
    try:
        rows = [[float(v) for v in row.split(",")] for row in cfg[key].split(";")]
        return np.array(rows)
    except ValueError as err:
        raise ConfigError(f"not a matrix: '{cfg[key]}'", key=key) from err


def _get_list(cfg, key, kind=int):
    try:
        return [kind(v) for v in cfg[key].split(",")]
    except ValueError as err:
        raise ConfigError(f"not a list: '{cfg[key]}'", key=key) from err


def build_local(cfg) -> LocalNormalForm:
    kind = cfg["local.kind"]
    try:
        return LocalNormalForm(
            kind=kind,
            lam=_get_float(cfg, "local.lambda"),
            gamma=_get_float(cfg, "local.gamma"),
            phi=_get_float(cfg, "local.phi"),
            sign_lambda=_get_int(cfg, "local.sign_lambda"),
            nonlinearity=cfg["local.nonlinearity"],
        )
    except ValueError as err:
        raise ConfigError(str(err), key="local.*") from err


def build_global(cfg, section: str, kind: str) -> GlobalMapTaylor:
    try:
        if kind == SADDLE:
            return saddle_global(
                x_plus=_get_float(cfg, f"{section}.x_plus"),
                y_minus=_get_float(cfg, f"{section}.y_minus"),
                a=_get_float(cfg, f"{section}.a"),
                b=_get_float(cfg, f"{section}.b"),
                c=_get_float(cfg, f"{section}.c"),
                d=_get_float(cfg, f"{section}.d"),
                mu=_get_float(cfg, f"{section}.mu"),
            )
        return focus_global(
            x_plus=_get_vector(cfg, f"{section}.x_plus"),
            y_minus=_get_float(cfg, f"{section}.y_minus"),
            a=_get_matrix(cfg, f"{section}.a"),
            b=_get_vector(cfg, f"{section}.b"),
            c=_get_vector(cfg, f"{section}.c"),
            d=_get_float(cfg, f"{section}.d"),
            mu=_get_float(cfg, f"{section}.mu"),
        )
    except ValueError as err:
        raise ConfigError(str(err), key=f"{section}.*") from err


def build_return_config(cfg, k=None, m=None) -> ReturnMapConfig:
    local = build_local(cfg)
    try:
        return ReturnMapConfig(
            local=local,
            t1=build_global(cfg, "t1", local.kind),
            t2=build_global(cfg, "t2", local.kind),
            k=k if k is not None else _get_int(cfg, "return.k"),
            m=m if m is not None else _get_int(cfg, "return.m"),
        )
    except ValueError as err:
        raise ConfigError(str(err), key="return.*") from err


def build_model(cfg) -> ModelMap:
    family = cfg["model.family"]
    if family not in FAMILY_ARITY:
        raise ConfigError(f"unknown family '{family}'", key="model.family")
    params = _get_list(cfg, "model.params", float)
    try:
        return ModelMap(family, tuple(params))
    except ValueError as err:
        raise ConfigError(str(err), key="model.params") from err


def build_plane(cfg) -> PlaneSpec:
    return PlaneSpec(
        x_name=cfg["plane.x_name"],
        x_lo=_get_float(cfg, "plane.x_lo"),
        x_hi=_get_float(cfg, "plane.x_hi"),
        y_name=cfg["plane.y_name"],
        y_lo=_get_float(cfg, "plane.y_lo"),
        y_hi=_get_float(cfg, "plane.y_hi"),
    )


def build_sweep_spec(cfg) -> SweepSpec:
    plane = build_plane(cfg)
    if cfg["sweep.target"] == "family":
        target = FamilyPlaneTarget(build_model(cfg), plane.x_name, plane.y_name)
    elif cfg["sweep.target"] == "rescaled_return":
        target = RescaledPlaneTarget(build_return_config(cfg))
    else:
        raise ConfigError(
            f"unknown sweep target '{cfg['sweep.target']}'", key="sweep.target"
        )
    try:
        return SweepSpec(
            target=target,
            plane=plane,
            nx=_get_int(cfg, "sweep.nx"),
            ny=_get_int(cfg, "sweep.ny"),
            transient=_get_int(cfg, "sweep.transient"),
            max_period=_get_int(cfg, "sweep.max_period"),
            samples=_get_int(cfg, "sweep.samples"),
            escape_radius=_get_float(cfg, "sweep.escape_radius"),
            seed_rule=cfg["sweep.seed_rule"],
            seed_value=_get_float(cfg, "sweep.seed_value"),
            period_tol=_get_float(cfg, "sweep.period_tol"),
        )
    except ValueError as err:
        raise ConfigError(str(err), key="sweep.*") from err


def resolved_lines(cfg) -> list:
    """Sorted `key = value` lines for reproducibility headers."""
    return [f"{key} = {cfg[key]}" for key in sorted(cfg)]
