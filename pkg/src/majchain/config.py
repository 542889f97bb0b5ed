"""Scenario configuration: a flat YAML mapping, validated before any work.

Common keys
    engine       fpe | quantum | mixing | verify   (required)
    output_dir   directory for CSV outputs (default: $MAJCHAIN_OUTPUT_DIR or ./majchain-out)
    seed         integer, default 0
    battery      list of phi ids, or "standard" / "icx"

fpe keys
    model (linear|porous), D, nu, grid, t_end, snapshots (list), init
    (builtin:<cosine|bump|step> or a density CSV path), dt, safety,
    reverse (verify the time-reversed trajectory), verify (strict|weak|none)

quantum keys
    mode (sine:<k>|gauss), epsilon, gamma, hbar, grid, snapshots, reverse, verify

mixing keys
    map (logistic|doubling|tent|rotation[:alpha]), n_max, points, tol

verify keys
    input (trajectory directory or glob), tol, full_pairwise, weak, long_range_pairs
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

ENV_OUTPUT_DIR = "MAJCHAIN_OUTPUT_DIR"

ENGINES = ("fpe", "quantum", "mixing", "verify")

COMMON = {"engine": str, "output_dir": str, "seed": int, "battery": (list, str)}

ENGINE_KEYS = {
    "fpe": {"model": str, "D": float, "nu": float, "grid": int, "t_end": float,
            "snapshots": list, "init": str, "dt": float, "safety": float,
            "reverse": bool, "verify": str},
    "quantum": {"mode": str, "epsilon": float, "gamma": float, "hbar": float, "grid": int,
                "snapshots": list, "reverse": bool, "verify": str},
    "mixing": {"map": str, "n_max": int, "points": int, "tol": float},
    "verify": {"input": str, "tol": float, "full_pairwise": bool, "weak": bool,
               "long_range_pairs": int},
}

DEFAULTS = {
    "fpe": {"model": "linear", "D": 1.0, "nu": 2.0, "grid": 256, "t_end": 0.2,
            "snapshots": [0.0, 0.01, 0.05, 0.2], "init": "builtin:cosine", "dt": 0.0,
            "safety": 0.9, "reverse": False, "verify": "strict"},
    "quantum": {"mode": "sine:1", "epsilon": None, "gamma": 0.0, "hbar": 1.0, "grid": 512,
                "snapshots": [0.0, 1.0, 2.0, 5.0], "reverse": False, "verify": None},
    "mixing": {"map": "logistic", "n_max": 60, "points": 1_000_000, "tol": 0.02},
    "verify": {"tol": 1e-9, "full_pairwise": False, "weak": False, "long_range_pairs": 16},
}


class ConfigError(ValueError):
    pass


def default_output_dir() -> str:
    return os.environ.get(ENV_OUTPUT_DIR, "majchain-out")


@dataclass
class ScenarioConfig:
    engine: str
    params: dict
    output_dir: Path
    seed: int = 0
    battery: list[str] | str | None = None
    extra: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.params[key]


def _coerce(key, value, typ):
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if not isinstance(value, typ):
        raise ConfigError(f"{key}: expected {typ}, got {value!r}")
    return value


def validate(raw: dict) -> ScenarioConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    engine = raw.get("engine")
    if engine not in ENGINES:
        raise ConfigError(f"engine must be one of {ENGINES}, got {engine!r}")
    allowed = {**COMMON, **ENGINE_KEYS[engine]}
    unknown = sorted(set(raw) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown keys for engine {engine}: {unknown}")

    params = dict(DEFAULTS[engine])
    for key, value in raw.items():
        if key in COMMON:
            continue
        if value is None and params.get(key, 0) is None:
            continue
        params[key] = _coerce(key, value, ENGINE_KEYS[engine][key])

    if "grid" in params and params["grid"] < 2:
        raise ConfigError(f"grid must be >= 2 cells, got {params['grid']}")
    for key in ("D", "hbar", "n_max", "points"):
        if key in params and params[key] <= 0:
            raise ConfigError(f"{key} must be positive")
    if params.get("t_end", 0.0) < 0:
        raise ConfigError("t_end must be nonnegative")
    if "snapshots" in params:
        try:
            params["snapshots"] = sorted(float(t) for t in params["snapshots"])
        except (TypeError, ValueError):
            raise ConfigError("snapshots must be a list of numbers") from None
        if any(t < 0 for t in params["snapshots"]):
            raise ConfigError("snapshot times must be nonnegative")
    if engine == "fpe" and params["snapshots"] and params["snapshots"][-1] > params["t_end"]:
        raise ConfigError("snapshot times must not exceed t_end")
    if engine == "verify" and "input" not in params:
        raise ConfigError("verify engine requires 'input'")
    if params.get("verify") not in (None, "strict", "weak", "none"):
        raise ConfigError("verify must be strict, weak or none")

    seed = _coerce("seed", raw.get("seed", 0), int)
    battery = raw.get("battery")
    if battery is not None:
        battery = _coerce("battery", battery, (list, str))
    out = raw.get("output_dir") or default_output_dir()
    return ScenarioConfig(engine, params, Path(out), seed, battery)


def load_config(path: str | Path) -> ScenarioConfig:
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return validate(raw)
