"""CSV / JSON writers.  Output is byte-stable for identical inputs."""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .monitors import MonitorReport
from .solver import FlowTrajectory

TRAJECTORY_HEADER = ("t", "r", "u", "du", "H", "W", "A2", "kappa1", "kappa2")
MONITOR_HEADER = ("t", "series", "value")


class OutputError(OSError):
    pass


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write(path: Path, text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path


def trajectory_rows(traj: FlowTrajectory | None) -> Iterable[str]:
    from .geometry import derivatives

    if traj is None:
        return
    for s in traj.samples:
        du, _ = derivatives(s.profile)
        g = s.geometry
        cols = (s.profile.r, s.profile.u, du, g.H, g.W, g.A2, g.kappa1, g.kappa2)
        t = fmt(s.t)
        for i in range(s.profile.grid.size):
            yield ",".join([t] + [fmt(c[i]) for c in cols])


def emit_trajectory_csv(traj: FlowTrajectory | None, path: str | Path) -> Path:
    lines = [",".join(TRAJECTORY_HEADER), *trajectory_rows(traj)]
    return _write(Path(path), "\n".join(lines) + "\n")


def emit_monitor_csv(reports: Iterable[MonitorReport], path: str | Path) -> Path:
    lines = [",".join(MONITOR_HEADER)]
    for rep in reports:
        for name, values in rep.series.items():
            label = f"{rep.name}.{name}"
            for t, v in zip(rep.times, values):
                lines.append(f"{fmt(t)},{label},{fmt(v)}")
    return _write(Path(path), "\n".join(lines) + "\n")


def emit_profile_csv(r: np.ndarray, u: np.ndarray, path: str | Path) -> Path:
    lines = ["r,u", *(f"{fmt(a)},{fmt(b)}" for a, b in zip(r, u))]
    return _write(Path(path), "\n".join(lines) + "\n")


def jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def emit_json(obj: Any, path: str | Path) -> Path:
    return _write(Path(path), json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n")


def sha256_file(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def validate_trajectory_csv(path: str | Path) -> int:
    """Schema check: header, column count, non-decreasing t.  Returns row count."""
    with open(path, newline="") as fh:
        lines = fh.read().split("\n")
    if lines[0] != ",".join(TRAJECTORY_HEADER):
        raise ValueError(f"bad header {lines[0]!r}")
    rows = [ln for ln in lines[1:] if ln]
    last = -math.inf
    for k, ln in enumerate(rows):
        cols = ln.split(",")
        if len(cols) != len(TRAJECTORY_HEADER):
            raise ValueError(f"row {k}: {len(cols)} columns")
        t = float(cols[0])
        if t < last:
            raise ValueError(f"row {k}: time decreases")
        last = t
    return len(rows)
