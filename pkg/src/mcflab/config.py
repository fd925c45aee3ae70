"""Experiment configuration and the flat ``key = value`` config format.

Keys are dotted field paths, e.g.::

    # alpha = 1.5 power graph on the default rig
    initial_data.kind = power_graph
    initial_data.alpha = 1.5
    solver.t_end = 5
    rescaling.j_list = 2, 4
"""

from __future__ import annotations

import dataclasses
import math
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .monitors import MonitorConfig
from .solver import SolverConfig

INITIAL_KINDS = ("power_graph", "translator", "expander", "plane", "tabulated")


class ConfigError(ValueError):
    pass


@dataclass
class InitialData:
    kind: str = "power_graph"
    alpha: float = 2.0
    eps_smooth: float | None = None
    N: float = 1.0
    c: float = 1.0
    slope: float = 1.0
    height: float = 0.0
    path: str = ""


@dataclass
class RescalingConfig:
    j_list: tuple[float, ...] = (2.0, 4.0)
    gamma: float = 1.0
    fit_radius: float = 2.0


@dataclass
class ExperimentConfig:
    initial_data: InitialData = field(default_factory=InitialData)
    n: int = 2
    r_max: float = 30.0
    h: float = 0.05
    solver: SolverConfig = field(default_factory=SolverConfig)
    monitors: MonitorConfig = field(default_factory=MonitorConfig)
    rescaling: RescalingConfig = field(default_factory=RescalingConfig)
    output_dir: str = "runs"
    # noncollapse search is O(nodes^2); evaluate every k-th sample
    noncollapse_stride: int = 1

    def validate(self) -> "ExperimentConfig":
        errors = []
        d = self.initial_data
        if d.kind not in INITIAL_KINDS:
            errors.append(f"initial_data.kind: must be one of {INITIAL_KINDS}, got {d.kind!r}")
        if d.kind == "power_graph" and not d.alpha > 0:
            errors.append(f"initial_data.alpha: must be > 0, got {d.alpha}")
        if d.eps_smooth is not None and not d.eps_smooth >= 0:
            errors.append(f"initial_data.eps_smooth: must be >= 0, got {d.eps_smooth}")
        if d.kind == "translator" and not d.N > 0:
            errors.append(f"initial_data.N: must be > 0, got {d.N}")
        if d.kind == "expander" and not (d.c > 0 and d.slope > 0):
            errors.append("initial_data.c, initial_data.slope: must be > 0")
        if d.kind == "tabulated" and not d.path:
            errors.append("initial_data.path: required for tabulated data")
        if self.n < 2:
            errors.append(f"n: must be >= 2, got {self.n}")
        if not (self.h > 0 and self.r_max > 0):
            errors.append("h, r_max: must be positive")
        else:
            steps = self.r_max / self.h
            if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
                errors.append(f"r_max: r_max/h must be an integer, got {steps!r}")
        if self.noncollapse_stride < 1:
            errors.append(f"noncollapse_stride: must be >= 1, got {self.noncollapse_stride}")
        if not 0 < self.rescaling.gamma <= 1:
            errors.append(f"rescaling.gamma: must lie in (0, 1], got {self.rescaling.gamma}")
        if errors:
            raise ConfigError("; ".join(errors))
        return self


def _convert(raw: str, tp: Any, key: str) -> Any:
    text = raw.strip()
    origin = typing.get_origin(tp)
    if origin in (typing.Union, types.UnionType):
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if text.lower() in ("none", "null", ""):
            return None
        return _convert(text, args[0], key)
    if origin is tuple:
        inner = typing.get_args(tp)[0]
        return tuple(_convert(part, inner, key) for part in text.split(",") if part.strip())
    try:
        if tp is bool:
            if text.lower() in ("true", "1", "yes"):
                return True
            if text.lower() in ("false", "0", "no"):
                return False
            raise ValueError(text)
        if tp is int:
            return int(text)
        if tp is float:
            value = float(text)
            if math.isnan(value):
                raise ValueError(text)
            return value
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as {tp.__name__}") from None
    return text


def set_field(config: ExperimentConfig, key: str, raw: Any) -> None:
    obj: Any = config
    parts = key.split(".")
    for part in parts[:-1]:
        if not dataclasses.is_dataclass(obj) or part not in {f.name for f in dataclasses.fields(obj)}:
            raise ConfigError(f"{key}: unknown section {part!r}")
        obj = getattr(obj, part)
    name = parts[-1]
    if not dataclasses.is_dataclass(obj):
        raise ConfigError(f"{key}: not a field path")
    hints = typing.get_type_hints(type(obj))
    if name not in hints or name not in {f.name for f in dataclasses.fields(obj)}:
        raise ConfigError(f"{key}: unknown field")
    tp = hints[name]
    if dataclasses.is_dataclass(tp):
        raise ConfigError(f"{key}: is a section, set its fields instead")
    value = _convert(raw, tp, key) if isinstance(raw, str) else raw
    object.__setattr__(obj, name, value)


def parse_config_text(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    config = base or ExperimentConfig()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        set_field(config, key, value)
    return config


def load_config(path: str | Path | None, overrides: dict[str, Any] | None = None) -> ExperimentConfig:
    config = ExperimentConfig()
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        parse_config_text(text, config)
    for key, value in (overrides or {}).items():
        if value is not None:
            set_field(config, key, value)
    _revalidate_sections(config)
    return config.validate()


def _revalidate_sections(config: ExperimentConfig) -> None:
    # rerun the section dataclasses' own checks after field assignment
    for name in ("solver", "monitors"):
        section = getattr(config, name)
        try:
            type(section)(**dataclasses.asdict(section))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{name}: {exc}") from None


def config_to_dict(config: ExperimentConfig) -> dict[str, Any]:
    return dataclasses.asdict(config)


def flatten(d: dict[str, Any], prefix: str = "") -> dict[str, Any]:
    out: dict[str, Any] = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(flatten(v, key + "."))
        else:
            out[key] = v
    return out


def dump_config_text(config: ExperimentConfig) -> str:
    lines = []
    for key, value in flatten(config_to_dict(config)).items():
        if isinstance(value, (tuple, list)):
            value = ", ".join(repr(v) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
