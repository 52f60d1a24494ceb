"""Experiment configuration: a flat ``key = value`` file plus overrides.

Example file::

    # 30-dimensional Gaussian, additive kernel
    target = gaussian_iid
    dim = 30
    kernel = additive
    scale = 2.4
    iters = 20000
    diffeo.kind = composite

Blank lines and ``#`` comments are ignored.  Dotted keys map to underscored
fields (``diffeo.kind`` -> ``diffeo_kind``).
"""
from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

TARGETS = ("gaussian_iid", "gaussian_corr", "student_t", "cauchy")
KERNELS = ("rwmh", "additive", "multiplicative", "addmult", "mixture_star", "essential_p")
INITS = ("point", "target")


@dataclass
class ExperimentConfig:
    target: str = "gaussian_iid"
    dim: int = 10
    dof: float = 10.0
    iid: bool = False
    kernel: str = "additive"
    scale: float = 2.4
    mu: float = 0.35
    sigma: float = 1.0
    l1: float = 0.05
    l2: float = 0.95
    p: Optional[float] = None
    q: Optional[float] = None
    add_p: Optional[float] = None
    mixing_weight: float = 0.5
    n0_halfwidth: float = 0.1
    pi_n0: Optional[float] = None
    partition: Optional[tuple] = None
    diffeo_kind: Optional[str] = None
    diffeo_R: float = 1.0
    diffeo_p: float = 3.0
    diffeo_b: float = 1.0
    iters: int = 20000
    replicates: int = 100
    burn_in_fraction: float = 0.2
    seed: int = 0
    output_path: Optional[str] = None
    coordinate_policy: str = "average"
    record_every: int = 1
    init: str = "point"
    x0: Optional[tuple] = None

    def validate(self) -> "ExperimentConfig":
        if self.target not in TARGETS:
            raise ValueError(f"unknown target {self.target!r}; choose from {', '.join(TARGETS)}")
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}; choose from {', '.join(KERNELS)}")
        if self.init not in INITS:
            raise ValueError(f"init must be one of {INITS}, got {self.init!r}")
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if self.target == "student_t" and not self.dof > 0:
            raise ValueError("dof must be positive")
        if self.iters < 1 or self.replicates < 1 or self.record_every < 1:
            raise ValueError("iters, replicates and record_every must be positive")
        if not 0.0 <= self.burn_in_fraction < 1.0:
            raise ValueError("burn_in_fraction must lie in [0, 1) so that iters exceeds the burn-in")
        if self.x0 is not None and len(self.x0) != self.dim:
            raise ValueError(f"x0 has {len(self.x0)} entries but dim is {self.dim}")
        if self.diffeo_kind is not None and self.diffeo_kind not in ("poly", "exp", "composite"):
            raise ValueError(f"unknown diffeo.kind {self.diffeo_kind!r}")
        return self

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes).validate()


def _field_types() -> dict:
    hints = typing.get_type_hints(ExperimentConfig)
    return {f.name: hints[f.name] for f in dataclasses.fields(ExperimentConfig)}


def _convert(name: str, raw, tp):
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    origin = typing.get_origin(tp)
    if origin is typing.Union:
        if text.lower() in ("", "none", "auto"):
            return None
        tp = next(a for a in typing.get_args(tp) if a is not type(None))
    if tp is bool:
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: expected a boolean, got {raw!r}")
    if tp is tuple:
        parts = [s for s in text.replace(";", ",").split(",") if s.strip()]
        conv = int if name == "partition" else float
        return tuple(conv(s) for s in parts)
    try:
        return tp(text)
    except ValueError as exc:
        raise ValueError(f"{name}: cannot parse {raw!r} as {tp.__name__}") from exc


def normalize_key(key: str) -> str:
    key = key.strip().replace("-", "_")
    return key.replace(".", "_")


def apply_overrides(cfg: ExperimentConfig, values: dict) -> ExperimentConfig:
    types = _field_types()
    changes = {}
    for k, v in values.items():
        name = normalize_key(k)
        if name == "out":
            name = "output_path"
        if name not in types:
            raise ValueError(f"unknown config key {k!r}")
        changes[name] = _convert(name, v, types[name])
    return cfg.replace(**changes)


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {line!r}")
        k, v = line.split("=", 1)
        values[k.strip()] = v.strip()
    return values


def load_config(path=None, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Defaults, then the file at ``path`` (if any), then ``overrides``."""
    cfg = ExperimentConfig()
    if path is not None:
        cfg = apply_overrides(cfg, parse_config_text(Path(path).read_text()))
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    return cfg.validate()
