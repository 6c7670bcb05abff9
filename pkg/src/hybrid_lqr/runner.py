# SPDX-FileCopyrightText: 2026 Bentley Systems, Incorporated
#
# SPDX-License-Identifier: Apache-2.0

"""
Task dispatch shared by the CLI and the MCP tools.

run() resolves the scenario, runs one task, and writes report.json (plus the
task's tables) into the output directory. Solver failures still produce a
report.json describing the error before the exception propagates.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .config import RunConfig
from .core.dp_oracle import GridSpec, bellman_residual, dp_rollout, dp_solve, save_value_grid
from .core.guard_analysis import beating_flag, beating_sets_by_images, has_war, invariant_guard_report
from .core.hybrid_system import first_return_time, simulate
from .core.lqr_core import default_step, reconstruct, solve_riccati_backward, trajectory_cost
from .core.presets import ScenarioPreset, list_presets
from .core.spatial_hlqr import SpatialSolveReport, SpatialSolverOptions, explore_branches, solve_spatial
from .core.temporal_hlqr import JumpSchedule, reconstruct_temporal, solve_temporal_costate
from .core.zeno_models import (
    estimate_zeno_time,
    first_order_zeno_report,
    second_order_zeno_report,
    zeno_time_first_order,
    zeno_time_second_order,
)
from .errors import ConfigError, HybridControlError, InvalidModelError, SuspectedZenoError
from .utils.report_builders import ComparisonReportBuilder, TrajectoryReportBuilder
from .utils.serialization import jump_times_frame, write_json, write_jump_times_csv

logger = logging.getLogger(__name__)

REPORT_NAME = "report.json"
JUMP_TIMES_NAME = "jump_times.csv"
DEFAULT_ZENO_JUMPS = 20


@dataclass
class RunResult:
    task: str
    output_dir: Path
    report: dict
    artifacts: list[Path] = field(default_factory=list)

    @property
    def report_path(self) -> Path:
        return self.output_dir / REPORT_NAME


def run(config: RunConfig) -> RunResult:
    """Run one task and write its artifacts.

    Raises:
        HybridControlError: after report.json has been written with the
            error's family, message and details.
    """
    out = config.output_dir()
    handler = TASKS[config.task]
    logger.info("Running task %s (preset=%s) into %s", config.task, config.preset, out)
    started = time.perf_counter()
    try:
        scenario = config.load_scenario() if config.preset or config.scenario else None
        report, artifacts = handler(config, scenario, out)
    except HybridControlError as e:
        logger.error("Task %s failed: %s", config.task, e)
        write_json({"task": config.task, **e.to_dict()}, out / REPORT_NAME)
        raise
    report = {"task": config.task, "status": "ok", **report}
    write_json(report, out / REPORT_NAME)
    logger.info("Task %s finished in %.3f s", config.task, time.perf_counter() - started)
    return RunResult(task=config.task, output_dir=out, report=report, artifacts=[*artifacts, out / REPORT_NAME])


def _step(config: RunConfig, scenario: ScenarioPreset) -> float:
    return float(config.step) if config.step is not None else default_step(scenario.horizon)


def _scenario_header(scenario: ScenarioPreset) -> dict:
    return {
        "scenario": scenario.name,
        "n": scenario.system.n,
        "m": scenario.system.m,
        "horizon": list(scenario.horizon),
        "x0": list(scenario.x0),
    }


# =============================================================================
# Tasks
# =============================================================================


def _analyze(config: RunConfig, scenario: ScenarioPreset, out: Path):
    sys = scenario.system
    try:
        flag = beating_flag(sys.C, sys.lam)
        beating, blocking_dim = flag.to_dict(), flag.blocking_dim
    except InvalidModelError:
        # Singular reset: use the image recursion.
        dims = [int(basis.shape[1]) for basis in beating_sets_by_images(sys.C, sys.lam)]
        beating, blocking_dim = {"dims": dims, "method": "images"}, dims[-1]
    report = {
        **_scenario_header(scenario),
        "trivially_blocking": blocking_dim == 0,
        "beating": beating,
        "invariant_guard": invariant_guard_report(sys.A, sys.C, sys.lam).to_dict(),
        "war": has_war(sys.B, sys.lam),
    }
    if blocking_dim:
        logger.warning("System is not trivially blocking (blocking dimension %d)", blocking_dim)
    x0 = np.asarray(scenario.x0, dtype=float)
    if not sys.is_affine and np.any(x0):
        t_max = scenario.horizon[1] - scenario.horizon[0]
        tau = first_return_time(sys, x0, t_max)
        report["first_return_time"] = tau if math.isfinite(tau) else None
    return report, []


def _simulate(config: RunConfig, scenario: ScenarioPreset, out: Path):
    sys = scenario.system
    traj = simulate(sys, scenario.x0, None, scenario.horizon, _step(config, scenario), config.max_jumps)
    cost = trajectory_cost(traj, scenario.cost)
    builder = TrajectoryReportBuilder(out)
    summary = builder.build(traj, sys.n, sys.m, cost)
    return {**_scenario_header(scenario), "trajectory": summary}, builder.artifacts


def _closed_form_zeno(scenario: ScenarioPreset) -> dict:
    params = scenario.expected.get("params", {})
    x0, y0 = scenario.x0[0], scenario.x0[1]
    if {"a", "b", "c"} <= set(params):
        a, b, c = params["a"], params["b"], params["c"]
        zeta = zeno_time_first_order(a, b, c, x0, y0)
        exact = estimate_zeno_time(first_order_zeno_report(a, b, c, x0, y0)) if zeta is not None else None
        return {
            "kind": "first_order",
            "zeno_time": zeta,
            "exact_series_estimate": exact.extrapolated_time if exact else None,
        }
    if {"g", "e"} <= set(params):
        times = zeno_time_second_order(params["g"], params["e"], x0, y0)
        exact = estimate_zeno_time(second_order_zeno_report(params["g"], params["e"], x0, y0))
        return {
            "kind": "second_order",
            **times.to_dict(),
            "exact_series_estimate": exact.extrapolated_time,
            "series_vs_exact_gap": times.series - exact.extrapolated_time,
        }
    return {}


def _zeno(config: RunConfig, scenario: ScenarioPreset, out: Path):
    sys = scenario.system
    max_jumps = config.max_jumps or DEFAULT_ZENO_JUMPS
    report = {**_scenario_header(scenario), "max_jumps": max_jumps}
    try:
        traj = simulate(sys, scenario.x0, None, scenario.horizon, _step(config, scenario), max_jumps)
    except SuspectedZenoError as e:
        estimate = estimate_zeno_time(e.report)
        report.update(
            suspected=True, reason=e.report.reason, simulation=e.report.to_dict(), estimate=estimate.to_dict()
        )
        report["extrapolated_zeno_time"] = estimate.extrapolated_time
        jump_times, dwell_times = e.report.jump_times, e.report.dwell_times
    else:
        report.update(suspected=False, jump_count=traj.jump_count, min_dwell_time=traj.min_dwell_time)
        jump_times = [j.t for j in traj.jumps]
        dwell_times = [j.dwell_time for j in traj.jumps]
    if "params" in scenario.expected:
        report["params"] = dict(scenario.expected["params"])
    closed = _closed_form_zeno(scenario)
    if closed:
        report["closed_form"] = closed
    path = write_jump_times_csv(jump_times_frame(jump_times, dwell_times), out / JUMP_TIMES_NAME)
    return report, [path]


def _lqr_family(config: RunConfig, scenario: ScenarioPreset, out: Path, affine: bool):
    sys, cost = scenario.system, scenario.cost
    b = np.asarray(sys.drift) if affine else None
    sol = solve_riccati_backward(sys.A, sys.B, cost, scenario.horizon, _step(config, scenario), b)
    traj = reconstruct(sys.A, sys.B, cost, sol, scenario.x0, b)
    value = trajectory_cost(traj, cost)
    S0, c0 = sol.evaluate(sol.t0)
    x0 = np.asarray(scenario.x0, dtype=float)
    quadratic = float(0.5 * x0 @ S0 @ x0 + c0 @ x0)
    builder = TrajectoryReportBuilder(out)
    report = {
        **_scenario_header(scenario),
        "cost": value,
        "S_t0": S0.tolist(),
        "c_t0": c0.tolist(),
        "trajectory": builder.build(traj, sys.n, sys.m, value),
    }
    if affine:
        # The scalar part of the affine value function is not integrated; only quadrature is reported.
        report["value_without_scalar_term"] = quadratic
    else:
        report["value_identity"] = quadratic
        report["value_identity_gap"] = abs(value - quadratic) / max(abs(quadratic), np.finfo(float).tiny)
    return report, builder.artifacts


def _lqr(config: RunConfig, scenario: ScenarioPreset, out: Path):
    if scenario.system.is_affine:
        logger.warning("lqr ignores the drift of an affine scenario; use aqr to include it")
    return _lqr_family(config, scenario, out, affine=False)


def _aqr(config: RunConfig, scenario: ScenarioPreset, out: Path):
    return _lqr_family(config, scenario, out, affine=True)


def _hlqr_temporal(config: RunConfig, scenario: ScenarioPreset, out: Path):
    sys, cost = scenario.system, scenario.cost
    sched = JumpSchedule(tuple(config.schedule))
    affine = (sys.drift, sys.jump_bias) if sys.is_affine else None
    sol = solve_temporal_costate(sys.A, sys.B, cost, sched, sys.C, scenario.horizon, _step(config, scenario), affine)
    traj = reconstruct_temporal(sys.A, sys.B, cost, sched, sys.C, sol, scenario.x0, affine)
    kappa = np.asarray(sys.jump_bias)
    identities = []
    for t in sched.times:
        (S_m, c_m), (S_p, c_p) = sol.one_sided(t)
        identities.append(
            {
                "t": t,
                "S_residual": float(np.max(np.abs(S_m - sys.C.T @ S_p @ sys.C))),
                "c_residual": float(np.max(np.abs(c_m - sys.C.T @ (S_p @ kappa + c_p)))),
            }
        )
    value = trajectory_cost(traj, cost)
    builder = TrajectoryReportBuilder(out)
    report = {
        **_scenario_header(scenario),
        "schedule": list(sched.times),
        "jump_identities": identities,
        "cost": value,
        "trajectory": builder.build(traj, sys.n, sys.m, value),
    }
    return report, builder.artifacts


def _spatial_options(config: RunConfig, scenario: ScenarioPreset) -> SpatialSolverOptions:
    options = dict(scenario.solver)
    if config.step is not None:
        options["step"] = float(config.step)
    try:
        return SpatialSolverOptions.from_dict(options)
    except InvalidModelError as e:
        raise ConfigError(str(e), {"field": "solver"}) from e
    except TypeError as e:
        raise ConfigError(f"invalid solver options: {e}", {"field": "solver"}) from e


def _jump_count_checks(scenario: ScenarioPreset, **actual: int) -> dict:
    """{expected, actual, passed} per method, keyed jump_count for the solver and <method>_jump_count otherwise."""
    expected = scenario.expected.get("jump_count")
    if expected is None:
        return {}
    checks = {}
    for method, count in actual.items():
        passed = count == expected
        if not passed:
            logger.warning("Expected %d jumps for %s (%s), got %d", expected, scenario.name, method, count)
        key = "jump_count" if method == "mp" else f"{method}_jump_count"
        checks[key] = {"expected": int(expected), "actual": int(count), "passed": passed}
    return checks


def _solve_spatial(config: RunConfig, scenario: ScenarioPreset) -> tuple[SpatialSolveReport, dict]:
    options = _spatial_options(config, scenario)
    if config.explore_branches:
        exploration = explore_branches(scenario.system, scenario.cost, scenario.x0, scenario.horizon, options)
        return exploration.best.report, {"branches": exploration.to_dict()}
    return solve_spatial(scenario.system, scenario.cost, scenario.x0, scenario.horizon, options), {}


def _hlqr_spatial(config: RunConfig, scenario: ScenarioPreset, out: Path):
    sys = scenario.system
    result, extra = _solve_spatial(config, scenario)
    builder = TrajectoryReportBuilder(out)
    report = {
        **_scenario_header(scenario),
        "solver": result.to_dict(),
        "trajectory": builder.build(result.trajectory, sys.n, sys.m, result.cost),
        **extra,
    }
    checks = _jump_count_checks(scenario, mp=result.jump_count)
    if checks:
        report["checks"] = checks
    return report, builder.artifacts


def _grid(config: RunConfig, scenario: ScenarioPreset) -> GridSpec:
    if scenario.grid is None:
        raise ConfigError("task needs a DP grid (set 'grid' or use a preset that carries one)", {"field": "grid"})
    return GridSpec.from_config(scenario.grid)


def _run_dp(config: RunConfig, scenario: ScenarioPreset, out: Path):
    sys, cost = scenario.system, scenario.cost
    grid = _grid(config, scenario)
    vg = dp_solve(sys, cost, grid)
    residual = bellman_residual(sys, cost, vg, samples=config.residual_samples, seed=config.seed)
    rollout = dp_rollout(sys, cost, vg, scenario.x0)
    path = save_value_grid(vg, out / "value_grid.bin", scenario.x0)
    return vg, residual, rollout, [path, path.with_suffix(".json")]


def _dp(config: RunConfig, scenario: ScenarioPreset, out: Path):
    sys = scenario.system
    vg, residual, rollout, grid_files = _run_dp(config, scenario, out)
    builder = TrajectoryReportBuilder(out)
    report = {
        **_scenario_header(scenario),
        "value_grid": vg.summary(scenario.x0),
        "bellman_residual": residual,
        "rollout": rollout.to_dict(),
        "trajectory": builder.build(rollout.trajectory, sys.n, sys.m, rollout.cost),
    }
    return report, [*grid_files, *builder.artifacts]


def _compare(config: RunConfig, scenario: ScenarioPreset, out: Path):
    sys = scenario.system
    grid = _grid(config, scenario)
    result, extra = _solve_spatial(config, scenario)
    vg = dp_solve(sys, scenario.cost, grid)
    rollout = dp_rollout(sys, scenario.cost, vg, scenario.x0)

    mp_builder = TrajectoryReportBuilder(out)
    mp_summary = mp_builder.build(result.trajectory, sys.n, sys.m, result.cost)
    dp_builder = TrajectoryReportBuilder(out)
    dp_summary = dp_builder.build(rollout.trajectory, sys.n, sys.m, rollout.cost, prefix="dp_")
    comparison = ComparisonReportBuilder(out)
    summary = comparison.build(result.trajectory, result.cost, rollout, sys.n)
    report = {
        **_scenario_header(scenario),
        **summary,
        "mp": {"solver": result.to_dict(), "trajectory": mp_summary},
        "dp": {"rollout": rollout.to_dict(), "trajectory": dp_summary},
        **extra,
    }
    checks = _jump_count_checks(scenario, mp=result.jump_count, dp=rollout.jump_count)
    if checks:
        report["checks"] = checks
    return report, [*mp_builder.artifacts, *dp_builder.artifacts, *comparison.artifacts]


def _preset(config: RunConfig, scenario, out: Path):
    if scenario is None:
        return {"presets": list_presets()}, []
    document = scenario.to_config()
    path = write_json(document, out / "preset.json")
    return {"preset": document}, [path]


TASKS: dict[str, Callable] = {
    "analyze": _analyze,
    "simulate": _simulate,
    "zeno": _zeno,
    "lqr": _lqr,
    "aqr": _aqr,
    "hlqr-temporal": _hlqr_temporal,
    "hlqr-spatial": _hlqr_spatial,
    "dp": _dp,
    "compare": _compare,
    "preset": _preset,
}


def check_scenario(config: RunConfig) -> dict:
    """Resolve the configuration without solving; the dry-run path of the MCP tools."""
    result = {"task": config.task, "errors": [], "warnings": []}
    try:
        scenario = config.load_scenario() if config.preset or config.scenario else None
    except HybridControlError as e:
        result["errors"].append(str(e))
        return result
    if scenario is not None:
        result.update(_scenario_header(scenario))
        if config.task in ("dp", "compare") and scenario.grid is None:
            result["errors"].append("no DP grid configured")
        if scenario.expected.get("simulation_only") and config.task not in ("simulate", "zeno", "analyze", "preset"):
            result["warnings"].append(f"{scenario.name} is a simulation-only scenario")
        if scenario.system.m == 0 and config.task in ("lqr", "aqr", "hlqr-spatial", "hlqr-temporal", "compare"):
            result["warnings"].append("scenario has no control inputs")
    return result


__all__ = ["REPORT_NAME", "TASKS", "RunResult", "check_scenario", "run"]
