"""Run orchestration: build data, evolve, monitor, rescale, serialise."""

from __future__ import annotations

import copy
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .geometry import NumericalFailure
from .initial_data import build_initial
from .io import emit_json, emit_monitor_csv, emit_profile_csv, emit_trajectory_csv, sha256_file
from .monitors import (
    MonitorReport,
    gradient_ratio,
    harnack_report,
    noncollapse_preservation,
    pinching_check,
    type_classifier,
    w_evolution_residual,
)
from .rescaling import rescale_flow, select_blowup_points, soliton_match
from .solitons import expander_profile, translator_profile
from .solver import FlowTrajectory, SolverFailure, evolve

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_CHECK = 0, 1, 2, 3

TASKS = ("classify", "pinching", "noncollapse", "gradient", "w_evolution", "harnack", "rescale")
DEFAULT_ALPHAS = (0.5, 1.5, 2.0, 3.0)

# tolerances of the built-in --check assertions
STEADY_TOL = 5e-3
SELF_SIMILAR_TOL = 1e-2
A_BOUND_TOL = 1e-2
AXIS_FLOOR = 0.1
HALVING = 0.5
T_BOUND = 1.1


@dataclass
class RunManifest:
    config: dict
    code_version: str
    output_dir: str
    started: float
    finished: float | None = None
    status: str = "running"
    termination: str | None = None
    exit_code: int | None = None
    initial: dict = field(default_factory=dict)
    files: dict[str, str] = field(default_factory=dict)
    summary: dict = field(default_factory=dict, repr=False)

    def write(self) -> Path:
        d = asdict(self)
        d.pop("summary")
        return emit_json(d, Path(self.output_dir) / "manifest.json")


# -- row checks -------------------------------------------------------------------


def table1_row(alpha: float) -> str:
    if alpha <= 1:
        return "0<alpha<=1"
    if alpha < 2:
        return "1<alpha<2"
    if alpha == 2:
        return "alpha=2"
    return "alpha>2"


def _window(traj: FlowTrajectory, t0: float = 1.0) -> np.ndarray:
    return traj.times >= t0 - 1e-9


def power_graph_checks(traj: FlowTrajectory, alpha: float, classify: MonitorReport | None) -> dict[str, Any]:
    """Table 1 trend assertions for the |y|^alpha graph."""
    n = traj.grid.n
    A = np.sqrt(traj.field("A2"))
    axis = A[:, 0]
    win = _window(traj)
    checks: dict[str, Any] = {}
    if not win.any() or traj.times[-1] <= 1.0:
        checks["window"] = False
        return checks
    a1 = float(axis[traj.nearest(1.0)])
    aT = float(axis[-1])
    if alpha == 2:
        checks["A_le_2n2"] = bool(A.max() <= 2 * n**2 * (1 + A_BOUND_TOL))
        checks["A_axis_floor"] = bool(axis.min() >= AXIS_FLOOR)
        H, W = traj.field("H"), traj.field("W")
        checks["H_le_2nW"] = bool((2 * n * W - H).min() >= -1e-3 * H.max())
    elif alpha > 2:
        checks["A_axis_increasing"] = bool(np.all(np.diff(axis[win]) > 0))
        checks["type_iib"] = bool(classify is not None and classify.classification_hint == "type_iib_consistent")
    elif alpha > 1:
        checks["A_axis_decreasing"] = bool(np.all(np.diff(axis[win]) < 0))
        checks["A_axis_halved"] = bool(aT <= HALVING * a1)
    else:
        T = traj.times * A.max(axis=1) ** 2
        T1 = float(T[traj.nearest(1.0)])
        checks["T_bounded"] = bool(T[win].max() <= T_BOUND * T1)
        checks["type_iii"] = bool(classify is not None and classify.classification_hint == "type_iii_consistent")
    checks["A_axis_t1"] = a1
    checks["A_axis_tend"] = aT
    return checks


def translator_checks(traj: FlowTrajectory, u0: np.ndarray, N: float) -> dict[str, Any]:
    last = traj.samples[-1]
    err = float(np.max(np.abs(last.profile.u - (u0 + N * (last.t - traj.times[0])))))
    return {"steadiness_error": err, "steady": err <= STEADY_TOL}


def expander_checks(traj: FlowTrajectory, u0: np.ndarray, c: float, r_cap: float = 10.0) -> dict[str, Any]:
    from scipy.interpolate import CubicSpline

    grid = traj.grid
    last = traj.samples[-1]
    lam = math.sqrt(2.0 * c * (last.t - traj.times[0]) + 1.0)
    spline = CubicSpline(grid.r, u0, bc_type=((1, 0.0), "not-a-knot"))
    mask = grid.r <= min(r_cap, grid.r_max / lam)
    E = spline(grid.r[mask] / lam)
    err = float(np.max(np.abs(last.profile.u[mask] - lam * E) / np.maximum(1.0, E)))
    return {"self_similarity_error": err, "self_similar": err <= SELF_SIMILAR_TOL}


# -- runs -------------------------------------------------------------------------


def _soliton_fit(traj: FlowTrajectory, config: ExperimentConfig) -> dict[str, Any]:
    fits = []
    for j in config.rescaling.j_list:
        if j > traj.times[-1] + 1e-9:
            continue
        try:
            sel = select_blowup_points(traj, j, config.rescaling.gamma)
        except ValueError:
            continue
        flow = rescale_flow(traj, sel)
        m = soliton_match(flow, config.rescaling.fit_radius)
        fits.append(
            {
                "j": j,
                "t_sel": sel.t_sel,
                "r_sel": sel.base_point[0],
                "L": sel.L,
                "effective_gamma": sel.effective_gamma,
                "base_curvature": flow.base_curvature,
                "N": m.N,
                "residual": m.residual,
                "nodes": m.nodes,
                "flat": m.flat,
            }
        )
    return {"fits": fits, "N": fits[-1]["N"] if fits else None, "residual": fits[-1]["residual"] if fits else None}


def _monitor(traj: FlowTrajectory, config: ExperimentConfig, tasks: Iterable[str]) -> tuple[list[MonitorReport], dict]:
    tasks = set(tasks)
    mc = config.monitors
    reports: list[MonitorReport] = []
    summary: dict[str, Any] = {
        "classification_hint": None,
        "loglog_slope": None,
        "max_tA2": float(np.max(traj.times * traj.field("A2").max(axis=1))),
        "pinching_margins": None,
        "delta_min_series_min": None,
        "soliton_fit": {"N": None, "residual": None},
    }
    if "classify" in tasks and np.count_nonzero(traj.times > 0) >= 10:
        rep = type_classifier(traj, mc)
        reports.append(rep)
        summary.update(classification_hint=rep.classification_hint, loglog_slope=rep.loglog_slope)
    if "pinching" in tasks:
        rep = pinching_check(traj, mc)
        reports.append(rep)
        summary["pinching_margins"] = {**rep.violations, **{k: v for k, v in rep.checks.items()}}
    mean_convex = bool(np.all(traj.field("H") > 0))
    if "noncollapse" in tasks and mean_convex:
        sub = copy.copy(traj)
        sub.samples = traj.samples[:: config.noncollapse_stride]
        rep = noncollapse_preservation(sub, config=mc)
        reports.append(rep)
        summary["delta_min_series_min"] = rep.extra["min_delta"]
    if "gradient" in tasks and mean_convex:
        reports.extend([gradient_ratio(traj, 1, mc), gradient_ratio(traj, 2, mc)])
    if "w_evolution" in tasks and len(traj) >= 3:
        reports.append(w_evolution_residual(traj, mc))
    if "harnack" in tasks and len(traj) >= 3:
        reports.append(harnack_report(traj, mc))
    if "rescale" in tasks:
        summary["soliton_fit"] = _soliton_fit(traj, config)
    return reports, summary


def _checks(traj: FlowTrajectory, u0: np.ndarray, config: ExperimentConfig, reports: list[MonitorReport]) -> dict[str, Any]:
    d = config.initial_data
    classify = next((r for r in reports if r.name == "classify"), None)
    if d.kind == "plane":
        return {"flat": bool(np.max(traj.field("A2")) == 0.0)}
    if d.kind == "translator":
        return translator_checks(traj, u0, d.N)
    if d.kind == "expander":
        return expander_checks(traj, u0, d.c)
    if d.kind == "power_graph":
        return power_graph_checks(traj, d.alpha, classify)
    return {}


def check_failures(checks: dict[str, Any]) -> list[str]:
    return [k for k, v in checks.items() if isinstance(v, bool) and not v]


def run_experiment(
    config: ExperimentConfig,
    tasks: Iterable[str] = TASKS,
    check: bool = False,
    out: str | Path | None = None,
    write_trajectory: bool = True,
) -> RunManifest:
    tasks = tuple(tasks)
    out_dir = Path(out if out is not None else config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(asdict(config), __version__, str(out_dir), started=time.time())
    manifest.write()
    try:
        profile, meta = build_initial(config)
        manifest.initial = meta
        traj = evolve(profile, config.solver)
    except SolverFailure as exc:
        return _fail(manifest, f"numerical_failure: {exc}", exc.trajectory, out_dir)
    except NumericalFailure as exc:
        return _fail(manifest, f"numerical_failure: {exc}", None, out_dir)
    manifest.termination = traj.termination
    reports, summary = _monitor(traj, config, tasks)
    checks = _checks(traj, profile.u, config, reports)
    summary = {"config": asdict(config), "termination": traj.termination, "initial": meta, **summary, "checks": checks}
    files = {}
    if write_trajectory:
        files["trajectory.csv"] = emit_trajectory_csv(traj, out_dir / "trajectory.csv")
    files["monitors.csv"] = emit_monitor_csv(reports, out_dir / "monitors.csv")
    files["summary.json"] = emit_json(summary, out_dir / "summary.json")
    if "rescale" in set(tasks):
        files.update(write_rescaled(traj, config, out_dir))
    failed = check_failures(checks)
    manifest.summary = summary
    manifest.status = "check_failed" if (check and failed) else "ok"
    manifest.exit_code = EXIT_CHECK if (check and failed) else EXIT_OK
    return _finalize(manifest, files)


def _fail(manifest: RunManifest, status: str, traj: FlowTrajectory | None, out_dir: Path) -> RunManifest:
    files = {}
    if traj is not None:
        files["trajectory.csv"] = emit_trajectory_csv(traj, out_dir / "trajectory.csv")
    manifest.status = status
    manifest.exit_code = EXIT_NUMERICAL
    return _finalize(manifest, files)


def _finalize(manifest: RunManifest, files: dict[str, Path]) -> RunManifest:
    manifest.files = {name: sha256_file(p) for name, p in sorted(files.items())}
    manifest.finished = time.time()
    manifest.write()
    return manifest


def run_soliton(config: ExperimentConfig, out: str | Path | None = None) -> RunManifest:
    """Solve the soliton named by initial_data.kind and write its profile."""
    out_dir = Path(out if out is not None else config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(asdict(config), __version__, str(out_dir), started=time.time())
    manifest.write()
    d = config.initial_data
    if d.kind == "translator":
        sol = translator_profile(d.N, config.n, config.r_max, config.h)
    elif d.kind == "expander":
        sol = expander_profile(d.c, config.n, d.slope, config.r_max, config.h)
    else:
        from .config import ConfigError

        raise ConfigError(f"initial_data.kind: soliton needs translator or expander, got {d.kind!r}")
    summary = {
        "config": asdict(config),
        "kind": sol.kind,
        "parameter": sol.parameter,
        "residual_max": sol.residual_max,
        "asymptotic_slope_ratio": sol.asymptotic_slope_ratio,
        "u0": float(sol.u[0]),
    }
    files = {
        "profile.csv": emit_profile_csv(sol.profile.r, sol.u, out_dir / "profile.csv"),
        "summary.json": emit_json(summary, out_dir / "summary.json"),
    }
    manifest.summary = summary
    manifest.status, manifest.exit_code = "ok", EXIT_OK
    return _finalize(manifest, files)


def write_rescaled(traj: FlowTrajectory, config: ExperimentConfig, out_dir: Path) -> dict[str, Path]:
    """Rescaled t' = 0 slices for each j, as r,u tables about the shifted axis."""
    files = {}
    for j in config.rescaling.j_list:
        try:
            sel = select_blowup_points(traj, j, config.rescaling.gamma)
        except ValueError:  # j beyond the run, or a flat flow
            continue
        flow = rescale_flow(traj, sel)
        sl = flow.at_zero()
        name = f"rescaled_j{j:g}.csv"
        files[name] = emit_profile_csv(sl.profile.r + sl.axis_offset, sl.profile.u, out_dir / name)
    return files


# -- Table 1 -----------------------------------------------------------------------


def _alpha_config(base: ExperimentConfig, alpha: float, out_dir: Path) -> ExperimentConfig:
    cfg = copy.deepcopy(base)
    cfg.initial_data.kind = "power_graph"
    cfg.initial_data.alpha = float(alpha)
    cfg.initial_data.eps_smooth = None
    cfg.output_dir = str(out_dir / f"alpha_{alpha:g}")
    return cfg.validate()


def _run_alpha(args) -> tuple[float, RunManifest | None, str | None]:
    cfg, check = args
    alpha = cfg.initial_data.alpha
    try:
        return alpha, run_experiment(cfg, check=check), None
    except Exception as exc:  # the suite keeps going and reports per-alpha status
        log.exception("alpha=%g failed", alpha)
        return alpha, None, f"{type(exc).__name__}: {exc}"


def table1_suite(
    base_config: ExperimentConfig,
    alphas: Iterable[float] = DEFAULT_ALPHAS,
    check: bool = False,
    out: str | Path | None = None,
    jobs: int = 1,
) -> RunManifest:
    out_dir = Path(out if out is not None else base_config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(asdict(base_config), __version__, str(out_dir), started=time.time())
    manifest.write()
    jobs_args = [(_alpha_config(base_config, a, out_dir), check) for a in alphas]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_alpha, jobs_args))
    else:
        results = [_run_alpha(a) for a in jobs_args]
    rows, any_check_failed, any_error = [], False, False
    for alpha, m, err in results:
        row: dict[str, Any] = {"alpha": alpha, "row": table1_row(alpha)}
        if m is None or m.exit_code == EXIT_NUMERICAL:
            any_error = True
            row.update(status=err or (m.status if m else "error"))
        else:
            s = m.summary
            failed = check_failures(s["checks"])
            any_check_failed |= bool(failed)
            row.update(
                status="ok",
                eps_smooth=s["initial"].get("eps_smooth"),
                termination=s["termination"],
                classification_hint=s["classification_hint"],
                loglog_slope=s["loglog_slope"],
                max_tA2=s["max_tA2"],
                A_axis_t1=s["checks"].get("A_axis_t1"),
                A_axis_tend=s["checks"].get("A_axis_tend"),
                soliton_residual=s["soliton_fit"]["residual"],
                failed_checks=failed,
            )
        rows.append(row)
    files = {"table1.json": emit_json({"rows": rows}, out_dir / "table1.json")}
    files["table1.csv"] = _emit_table_csv(rows, out_dir / "table1.csv")
    manifest.summary = {"rows": rows}
    if any_error:
        manifest.status, manifest.exit_code = "numerical_failure", EXIT_NUMERICAL
    elif check and any_check_failed:
        manifest.status, manifest.exit_code = "check_failed", EXIT_CHECK
    else:
        manifest.status, manifest.exit_code = "ok", EXIT_OK
    return _finalize(manifest, files)


TABLE_COLUMNS = (
    "alpha",
    "row",
    "status",
    "eps_smooth",
    "classification_hint",
    "loglog_slope",
    "max_tA2",
    "A_axis_t1",
    "A_axis_tend",
    "soliton_residual",
    "failed_checks",
)


def _emit_table_csv(rows: list[dict], path: Path) -> Path:
    from .io import _write, fmt

    def cell(v):
        if v is None:
            return ""
        if isinstance(v, list):
            return ";".join(v)
        if isinstance(v, float):
            return fmt(v)
        return str(v)

    lines = [",".join(TABLE_COLUMNS)] + [",".join(cell(row.get(c)) for c in TABLE_COLUMNS) for row in rows]
    return _write(path, "\n".join(lines) + "\n")
