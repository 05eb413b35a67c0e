"""Flat TOML experiment configuration with strict key checking.

Every key that changes a result must be written out in the file; the only
defaults are for output handling. Grid files use the same keys, and any key
may hold a list: list-valued keys are zipped together into grid rows.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

from ..core import ContractViolation

EXPERIMENTS = ("toy", "glm", "weight-diagnostic")
KERNELS = ("marginal", "gimh", "mcwm")
TOY_SCHEMES = ("langevin", "iid")


class ConfigError(ContractViolation):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int
    kernel: Optional[str] = None
    n: Optional[int] = None
    sweeps: Optional[int] = None
    initial_model: Optional[int] = None
    refresh_moves: Optional[int] = None
    # toy estimator
    model2_scheme: Optional[str] = None
    step_variance: Optional[float] = None
    truncation_radius: Optional[float] = None
    init_mean: Optional[Tuple[float, ...]] = None
    init_var: Optional[float] = None
    model1_proposal_var: Optional[float] = None
    model2_iid_var: Optional[float] = None
    # glm
    lam: Optional[float] = None
    prior_reading: Optional[str] = None
    dataset_path: Optional[str] = None
    dataset_seed: Optional[int] = None
    m: Optional[int] = None
    k: Optional[int] = None
    z_star: Optional[Tuple[float, ...]] = None
    within_moves: Optional[int] = None
    within_scale: Optional[float] = None
    # weight diagnostic
    model: Optional[int] = None
    epsilon: Optional[float] = None
    n_samples: Optional[int] = None
    n_values: Optional[Tuple[int, ...]] = None
    # output handling (defaults allowed)
    replicas: int = 1
    burn_in: int = 0
    out_dir: str = "out"
    name: str = ""

    def fingerprint(self) -> str:
        payload = {k: v for k, v in asdict(self).items() if k not in ("out_dir", "name")}
        blob = json.dumps(payload, sort_keys=True, default=list).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def to_dict(self) -> Dict[str, Any]:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self).items() if v is not None}

    def sort_key(self):
        return (self.kernel or "", self.n or 0, self.sweeps or 0, self.seed, self.name)


_TYPES = {
    "experiment": str, "seed": int, "kernel": str, "n": int, "sweeps": int, "initial_model": int,
    "refresh_moves": int, "model2_scheme": str, "step_variance": float, "truncation_radius": float,
    "init_mean": "floats", "init_var": float, "model1_proposal_var": float, "model2_iid_var": float,
    "lam": float, "prior_reading": str, "dataset_path": str, "dataset_seed": int, "m": int, "k": int,
    "z_star": "floats", "within_moves": int, "within_scale": float, "model": int, "epsilon": float,
    "n_samples": int, "n_values": "ints", "replicas": int, "burn_in": int, "out_dir": str, "name": str,
}

_CHAIN = ("kernel", "n", "sweeps", "initial_model")
_TOY = ("model2_scheme", "model1_proposal_var", "init_mean", "init_var")
_LANGEVIN = ("step_variance", "truncation_radius")
_GLM_DATA = ("dataset_seed", "m", "k", "z_star")

REQUIRED = {
    "toy": _CHAIN + _TOY + ("refresh_moves",),
    "glm": _CHAIN + _LANGEVIN + ("lam", "prior_reading", "refresh_moves", "within_moves", "within_scale"),
    "weight-diagnostic": ("model", "epsilon", "n_samples", "n_values") + _TOY,
}


def _coerce(key, value):
    kind = _TYPES[key]
    if kind == "floats":
        if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            raise ConfigError(f"{key} must be a list of numbers")
        return tuple(float(v) for v in value)
    if kind == "ints":
        if not isinstance(value, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
            raise ConfigError(f"{key} must be a list of integers")
        return tuple(value)
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ConfigError(f"{key} must be of type {kind.__name__}, got {value!r}")
    return value


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}")
    need = list(REQUIRED[cfg.experiment])
    if cfg.experiment == "glm" and cfg.dataset_path is None:
        need += _GLM_DATA
    if cfg.experiment in ("toy", "weight-diagnostic") and cfg.model2_scheme == "langevin":
        need += _LANGEVIN
    if cfg.experiment in ("toy", "weight-diagnostic") and cfg.model2_scheme == "iid":
        need += ("model2_iid_var",)
    missing = [k for k in need if getattr(cfg, k) is None]
    if missing:
        raise ConfigError(f"missing required keys for {cfg.experiment}: {missing}")
    if cfg.kernel is not None and cfg.kernel not in KERNELS:
        raise ConfigError(f"kernel must be one of {KERNELS}")
    if cfg.model2_scheme is not None and cfg.model2_scheme not in TOY_SCHEMES:
        raise ConfigError(f"model2_scheme must be one of {TOY_SCHEMES}")
    for key in ("n", "sweeps", "replicas", "n_samples"):
        v = getattr(cfg, key)
        if v is not None and v < 1:
            raise ConfigError(f"{key} must be >= 1")
    if cfg.seed < 0 or cfg.seed >= 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if cfg.burn_in < 0:
        raise ConfigError("burn_in must be >= 0")
    if cfg.sweeps is not None and cfg.burn_in >= cfg.sweeps:
        raise ConfigError("burn_in must be smaller than sweeps")
    return cfg


def _check_keys(raw: Dict[str, Any]):
    unknown = sorted(set(raw) - set(_TYPES))
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    nested = [k for k, v in raw.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f"config must be flat; tables found at {nested}")


def config_from_dict(raw: Dict[str, Any]) -> ExperimentConfig:
    _check_keys(raw)
    return validate(ExperimentConfig(**{k: _coerce(k, v) for k, v in raw.items()}))


def _read(path) -> Dict[str, Any]:
    with Path(path).open("rb") as fh:
        return tomllib.load(fh)


def load_config(path, seed: Optional[int] = None, out_dir: Optional[str] = None) -> ExperimentConfig:
    raw = _read(path)
    if seed is not None:
        raw["seed"] = seed
    if out_dir is not None:
        raw["out_dir"] = out_dir
    return config_from_dict(raw)


_LIST_KEYS = {k for k, t in _TYPES.items() if t in ("floats", "ints")}


def expand_grid(raw: Dict[str, Any]) -> List[ExperimentConfig]:
    """Zip list-valued keys into one config per row.

    Keys whose scalar type is already a list (``init_mean``, ``z_star``,
    ``n_values``) vary only when given as a list of lists.
    """
    _check_keys(raw)
    varying = {}
    for k, v in raw.items():
        if not isinstance(v, list):
            continue
        if k in _LIST_KEYS and not (v and isinstance(v[0], list)):
            continue
        varying[k] = v
    lengths = {len(v) for v in varying.values()}
    if len(lengths) > 1:
        raise ConfigError(f"grid lists must have equal lengths, got {sorted(lengths)}")
    rows = lengths.pop() if lengths else 1
    out = []
    for i in range(rows):
        row = {k: (varying[k][i] if k in varying else v) for k, v in raw.items()}
        out.append(config_from_dict(row))
    return sorted(out, key=ExperimentConfig.sort_key)


def load_grid(path, seed: Optional[int] = None, out_dir: Optional[str] = None) -> List[ExperimentConfig]:
    raw = _read(path)
    if seed is not None:
        raw["seed"] = seed
    if out_dir is not None:
        raw["out_dir"] = out_dir
    return expand_grid(raw)


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return validate(replace(cfg, **kw))
