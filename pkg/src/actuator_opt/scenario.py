"""Scenario definitions and the end-to-end pipeline runner.

A scenario file is a flat key-table text format: bracketed sections
containing one ``key = value`` per line, ``#`` comments, and an optional
``[assert]`` section holding pass/fail bounds checked against the run's
metrics.  Sections and their keys:

    [map]          grid (path to an obstacle grid, relative to this file)
    [vehicle]      start_x, start_y, start_theta, goal_x, goal_y,
                   dr, traversal_weight, initial_speed
    [costmap]      CostMapParams fields (robot_radius, halo_radius, ...)
    [constraints]  KinematicConstraints fields (phi_max, ...)
    [optimizer]    PerturbationParams fields (probe_delta, damping_length,
                   step_scale, max_phi_step) and SolverConfig fields
                   (max_iterations, improvement_tolerance)
    [speed]        SpeedParams fields (v_min, v_max, gamma, a_max, d_max)
    [assert]       max_phi <= v | max_phi_rate <= v | collision == b |
                   min_clearance >= v | final_cost <= v

Running a scenario executes: load grid -> build costmap -> A* seed ->
resample to constant arc length -> actuator-space solve -> speed plan ->
validate.  Validation replays the optimized path through the forward
model and samples the cost field at most half a cell apart; the
collision flag is set iff any sample reaches the lethal threshold.  All
metrics are recomputed from the final paths, never taken from solver
internals.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import re
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .actuator_path import (
    ActuatorPath,
    WorldPath,
    WorldPose,
    actuator_to_world,
    resample_cell_path,
    world_path_from_dict,
    world_path_to_dict,
    world_to_actuator,
)
from .base_planner import PlanningError, plan_base_path
from .cost_model import CostBreakdown, KinematicConstraints, sample_cost
from .costmap import CostMap, CostMapParams, GridFormatError, build_costmap, load_obstacle_grid
from .optimizer import PerturbationParams, SolveReport, SolverConfig, solve
from .speed_planner import SpeedParams, SpeedProfile, plan_speeds

__all__ = [
    "ScenarioError",
    "Assertion",
    "Scenario",
    "Metrics",
    "RunResult",
    "parse_scenario",
    "compute_metrics",
    "run_scenario",
    "run_with_replans",
    "evaluate_assertions",
    "run_suite",
    "result_to_dict",
    "result_from_dict",
    "write_json_atomic",
    "write_text_atomic",
    "THREADS_ENV_VAR",
]

THREADS_ENV_VAR = "ACTUATOR_OPT_THREADS"

_SECTIONS = ("map", "vehicle", "costmap", "constraints", "optimizer", "speed", "assert")
_ASSERT_OPS = {
    "max_phi": "<=",
    "max_phi_rate": "<=",
    "collision": "==",
    "min_clearance": ">=",
    "final_cost": "<=",
}


class ScenarioError(ValueError):
    """Malformed scenario file or unrunnable scenario."""


@dataclass(frozen=True)
class Assertion:
    key: str
    op: str
    value: float | bool


@dataclass
class Scenario:
    name: str
    grid_path: Path
    start: WorldPose
    goal: tuple[float, float]
    costmap_params: CostMapParams = field(default_factory=CostMapParams)
    constraints: KinematicConstraints = field(default_factory=KinematicConstraints)
    pparams: PerturbationParams = field(default_factory=PerturbationParams)
    solver: SolverConfig = field(default_factory=SolverConfig)
    speed: SpeedParams = field(default_factory=SpeedParams)
    dr: float = 0.4
    traversal_weight: float = 1.0
    initial_speed: float | None = None
    assertions: list[Assertion] = field(default_factory=list)
    source_file: Path | None = None


@dataclass
class Metrics:
    max_phi: float
    max_phi_rate: float
    min_clearance: float
    path_length: float
    collision: bool


@dataclass
class RunResult:
    scenario_name: str
    scenario_file: Path | None
    goal: tuple[float, float]
    base_path: WorldPath
    optimized_path: WorldPath
    profile: SpeedProfile
    report: SolveReport
    metrics: Metrics


# ---------------------------------------------------------------------------
# Scenario file parsing
# ---------------------------------------------------------------------------

def _parse_scalar(text: str, kind, where: str):
    try:
        if kind is bool:
            lowered = text.lower()
            if lowered in ("true", "false"):
                return lowered == "true"
            raise ValueError(f"expected true/false, got {text!r}")
        return kind(text)
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def _build_params(cls, table: dict, path: Path):
    kwargs = {}
    valid = {f.name: f.type for f in dataclasses.fields(cls)}
    for key, (lineno, raw) in table.items():
        if key not in valid:
            raise ScenarioError(f"{path}:{lineno}: unknown key {key!r} for this section")
        kind = int if "int" in str(valid[key]) else float
        kwargs[key] = _parse_scalar(raw, kind, f"{path}:{lineno}")
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def parse_scenario(path) -> Scenario:
    """Parse a scenario file; raises ScenarioError naming file and line."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from None

    tables: dict[str, dict] = {name: {} for name in _SECTIONS}
    assertions: list[Assertion] = []
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            m = re.fullmatch(r"\[(\w+)\]", line)
            if not m or m.group(1) not in _SECTIONS:
                raise ScenarioError(f"{path}:{lineno}: unknown section {line!r}")
            section = m.group(1)
            continue
        if section is None:
            raise ScenarioError(f"{path}:{lineno}: content before any [section] header")
        if section == "assert":
            m = re.fullmatch(r"(\w+)\s*(<=|>=|==)\s*(\S+)", line)
            if not m or m.group(1) not in _ASSERT_OPS:
                raise ScenarioError(f"{path}:{lineno}: bad assertion {line!r}")
            key, op, raw_value = m.groups()
            if op != _ASSERT_OPS[key]:
                raise ScenarioError(
                    f"{path}:{lineno}: assertion {key!r} uses {_ASSERT_OPS[key]!r}, not {op!r}"
                )
            kind = bool if key == "collision" else float
            assertions.append(Assertion(key, op, _parse_scalar(raw_value, kind, f"{path}:{lineno}")))
            continue
        key, eq, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not eq or not key or not value:
            raise ScenarioError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        if key in tables[section]:
            raise ScenarioError(f"{path}:{lineno}: duplicate key {key!r}")
        tables[section][key] = (lineno, value)

    map_table = tables["map"]
    if "grid" not in map_table:
        raise ScenarioError(f"{path}: [map] must set 'grid'")
    grid_lineno, grid_value = map_table.pop("grid")
    for key, (lineno, _) in map_table.items():
        raise ScenarioError(f"{path}:{lineno}: unknown key {key!r} in [map]")
    grid_path = (path.parent / grid_value).resolve()

    vehicle = dict(tables["vehicle"])

    def take(key, kind=float, default=None, required=False):
        if key not in vehicle:
            if required:
                raise ScenarioError(f"{path}: [vehicle] must set {key!r}")
            return default
        lineno, raw = vehicle.pop(key)
        return _parse_scalar(raw, kind, f"{path}:{lineno}")

    start = WorldPose(
        take("start_x", required=True),
        take("start_y", required=True),
        take("start_theta", default=0.0),
    )
    goal = (take("goal_x", required=True), take("goal_y", required=True))
    dr = take("dr", default=0.4)
    traversal_weight = take("traversal_weight", default=1.0)
    initial_speed = take("initial_speed", default=None)
    for key, (lineno, _) in vehicle.items():
        raise ScenarioError(f"{path}:{lineno}: unknown key {key!r} in [vehicle]")
    if dr <= 0:
        raise ScenarioError(f"{path}: dr must be positive")

    opt_table = tables["optimizer"]
    pfields = {f.name for f in dataclasses.fields(PerturbationParams)}
    pparams = _build_params(
        PerturbationParams, {k: v for k, v in opt_table.items() if k in pfields}, path
    )
    solver = _build_params(
        SolverConfig, {k: v for k, v in opt_table.items() if k not in pfields}, path
    )

    return Scenario(
        name=path.stem,
        grid_path=grid_path,
        start=start,
        goal=goal,
        costmap_params=_build_params(CostMapParams, tables["costmap"], path),
        constraints=_build_params(KinematicConstraints, tables["constraints"], path),
        pparams=pparams,
        solver=solver,
        speed=_build_params(SpeedParams, tables["speed"], path),
        dr=dr,
        traversal_weight=traversal_weight,
        initial_speed=initial_speed,
        assertions=assertions,
        source_file=path,
    )


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------

def _densify(xy: np.ndarray, max_spacing: float) -> np.ndarray:
    """All poses plus evenly spaced intermediate points so that no two
    consecutive samples are farther apart than ``max_spacing``.  Every
    segment is split into the same number of pieces (taken from the
    longest segment) to keep the rule trivially reproducible."""
    seg = np.diff(xy, axis=0)
    longest = float(np.hypot(seg[:, 0], seg[:, 1]).max())
    m = max(1, math.ceil(longest / max_spacing - 1e-12))
    t = (np.arange(m) / m)[None, :, None]
    pts = xy[:-1, None, :] + t * seg[:, None, :]
    return np.concatenate([pts.reshape(-1, 2), xy[-1:]])


def compute_metrics(act_path: ActuatorPath, world_path: WorldPath, cmap: CostMap) -> Metrics:
    """Recompute every reported metric from the final path geometry."""
    phis = act_path.phis
    max_phi = float(np.abs(phis).max())
    max_rate = float(np.abs(np.diff(phis)).max()) if phis.size > 1 else 0.0
    samples = _densify(world_path.xy, cmap.geometry.resolution / 2.0)
    values = sample_cost(cmap, samples)
    collision = bool((values >= cmap.hard_threshold).any())
    lethal_rows, lethal_cols = np.nonzero(cmap.lethal_mask())
    if lethal_rows.size:
        g = cmap.geometry
        centers = np.column_stack([
            g.origin_x + lethal_cols * g.resolution,
            g.origin_y + lethal_rows * g.resolution,
        ])
        min_clearance = float(cKDTree(centers).query(samples)[0].min())
    else:
        min_clearance = math.inf
    seg = np.diff(world_path.xy, axis=0)
    return Metrics(
        max_phi=max_phi,
        max_phi_rate=max_rate,
        min_clearance=min_clearance,
        path_length=float(np.hypot(seg[:, 0], seg[:, 1]).sum()),
        collision=collision,
    )


def run_scenario(scenario: Scenario, windowed: bool = False) -> RunResult:
    """Execute the full pipeline for one scenario.

    Raises GridFormatError / PlanningError / ScenarioError on bad input
    or an unreachable goal; never silently fakes a result.
    """
    with open(scenario.grid_path, "rb") as fh:
        grid = load_obstacle_grid(fh)
    cmap = build_costmap(grid, scenario.costmap_params)
    cells = plan_base_path(cmap, scenario.start, scenario.goal, scenario.traversal_weight)
    if len(cells) < 2:
        raise ScenarioError(f"{scenario.name}: start and goal fall in the same cell")
    base_world = resample_cell_path(cells, cmap.geometry, scenario.dr)
    base_act = world_to_actuator(base_world)
    if base_act.n_steps < 2:
        raise ScenarioError(f"{scenario.name}: seed path shorter than two steps")
    opt_act, report = solve(
        base_act, cmap, scenario.constraints, scenario.pparams, scenario.solver,
        windowed=windowed,
    )
    opt_world = actuator_to_world(opt_act)
    profile = plan_speeds(opt_act, scenario.speed, scenario.initial_speed)
    metrics = compute_metrics(opt_act, opt_world, cmap)
    return RunResult(
        scenario_name=scenario.name,
        scenario_file=scenario.source_file,
        goal=(float(scenario.goal[0]), float(scenario.goal[1])),
        base_path=base_world,
        optimized_path=opt_world,
        profile=profile,
        report=report,
        metrics=metrics,
    )


def run_with_replans(scenario: Scenario, replans: int = 0, windowed: bool = False) -> RunResult:
    """Run a scenario, then re-plan ``replans`` times with the start pose
    advanced along the latest optimized path (an open-loop stand-in for a
    live re-planning loop); returns the final run."""
    result = run_scenario(scenario, windowed)
    for _ in range(max(0, replans)):
        n_steps = len(result.optimized_path) - 1
        idx = min(max(1, round(n_steps / (replans + 1))), n_steps - 1)
        if idx < 1:
            break
        scenario = dataclasses.replace(
            scenario,
            start=result.optimized_path.pose(idx),
            initial_speed=float(result.profile.speeds[idx]),
        )
        result = run_scenario(scenario, windowed)
    return result


def evaluate_assertions(scenario: Scenario, result: RunResult) -> list[dict]:
    """Check the scenario's [assert] block against the run's metrics."""
    actuals = {
        "max_phi": result.metrics.max_phi,
        "max_phi_rate": result.metrics.max_phi_rate,
        "collision": result.metrics.collision,
        "min_clearance": result.metrics.min_clearance,
        "final_cost": result.report.final_cost.total,
    }
    checks = []
    for a in scenario.assertions:
        actual = actuals[a.key]
        if a.op == "<=":
            passed = actual <= a.value
        elif a.op == ">=":
            passed = actual >= a.value
        else:
            passed = actual == a.value
        checks.append({
            "key": a.key,
            "op": a.op,
            "limit": a.value,
            "actual": _json_number(actual),
            "passed": bool(passed),
        })
    return checks


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _json_number(value):
    if isinstance(value, bool):
        return value
    value = float(value)
    return value if math.isfinite(value) else None


def result_to_dict(result: RunResult) -> dict:
    """JSON form of a run.  Deterministic for a deterministic pipeline:
    the solver's wall time is deliberately left out."""
    report = result.report
    return {
        "scenario": {
            "name": result.scenario_name,
            "file": str(result.scenario_file) if result.scenario_file else None,
            "goal": [result.goal[0], result.goal[1]],
        },
        "base_path": world_path_to_dict(result.base_path),
        "optimized_path": world_path_to_dict(result.optimized_path),
        "speeds": [float(v) for v in result.profile.speeds],
        "report": {
            "initial_cost": dataclasses.asdict(report.initial_cost),
            "final_cost": dataclasses.asdict(report.final_cost),
            "iterations": report.iterations,
            "accepted_perturbations": report.accepted_perturbations,
            "sweep_costs": [float(c) for c in report.sweep_costs],
        },
        "metrics": {
            "max_phi": result.metrics.max_phi,
            "max_phi_rate": result.metrics.max_phi_rate,
            "min_clearance": _json_number(result.metrics.min_clearance),
            "path_length": result.metrics.path_length,
            "collision": result.metrics.collision,
        },
    }





def result_from_dict(d: dict) -> RunResult:
    """Inverse of :func:`result_to_dict` (wall time is not serialized and
    loads as zero)."""
    rep = d["report"]
    metrics = d["metrics"]
    clearance = metrics["min_clearance"]
    return RunResult(
        scenario_name=d["scenario"]["name"],
        scenario_file=Path(d["scenario"]["file"]) if d["scenario"]["file"] else None,
        goal=tuple(d["scenario"]["goal"]),
        base_path=world_path_from_dict(d["base_path"]),
        optimized_path=world_path_from_dict(d["optimized_path"]),
        profile=SpeedProfile(np.asarray(d["speeds"], dtype=np.float64)),
        report=SolveReport(
            initial_cost=CostBreakdown(**rep["initial_cost"]),
            final_cost=CostBreakdown(**rep["final_cost"]),
            iterations=rep["iterations"],
            accepted_perturbations=rep["accepted_perturbations"],
            wall_time=0.0,
            sweep_costs=list(rep["sweep_costs"]),
        ),
        metrics=Metrics(
            max_phi=metrics["max_phi"],
            max_phi_rate=metrics["max_phi_rate"],
            min_clearance=math.inf if clearance is None else clearance,
            path_length=metrics["path_length"],
            collision=metrics["collision"],
        ),
    )


def write_text_atomic(path: Path, text: str) -> None:
    """Write text via a temp file and rename, so concurrent writers never
    leave a partial artifact behind."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def write_json_atomic(path: Path, obj) -> None:
    write_text_atomic(path, json.dumps(obj, indent=2) + "\n")


# ---------------------------------------------------------------------------
# Suite runner
# ---------------------------------------------------------------------------

def _suite_workers(count: int) -> int:
    env = os.environ.get(THREADS_ENV_VAR)
    if env is not None:
        try:
            cap = int(env)
        except ValueError:
            raise ScenarioError(f"{THREADS_ENV_VAR} must be an integer, got {env!r}") from None
        if cap < 1:
            raise ScenarioError(f"{THREADS_ENV_VAR} must be at least 1")
    else:
        cap = min(4, os.cpu_count() or 1)
    return max(1, min(cap, count))


def run_suite(directory, report_out, out_dir=None, windowed: bool = False) -> int:
    """Run every ``*.scenario`` file in a directory and write a JSON
    summary to ``report_out``.

    Scenarios run in parallel (capped by the ACTUATOR_OPT_THREADS
    environment variable); per-scenario result files land in ``out_dir``
    when given.  Returns 0 when every scenario's assertions pass, 1
    otherwise; a scenario that errors (bad file, no path) counts as a
    failure, not a crash.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise NotADirectoryError(f"not a scenario directory: {directory}")
    files = sorted(directory.glob("*.scenario"))
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

    def run_one(path: Path) -> dict:
        try:
            sc = parse_scenario(path)
            result = run_scenario(sc, windowed=windowed)
            checks = evaluate_assertions(sc, result)
            if sc.assertions:
                passed = all(c["passed"] for c in checks)
            else:
                passed = not result.metrics.collision  # default gate
            if out_dir is not None:
                write_json_atomic(out_dir / f"{sc.name}.json", result_to_dict(result))
            return {
                "name": sc.name,
                "passed": bool(passed),
                "assertions": checks,
                "metrics": result_to_dict(result)["metrics"],
            }
        except (ScenarioError, GridFormatError, PlanningError, OSError, ValueError) as exc:
            return {"name": path.stem, "passed": False, "error": str(exc)}

    if files:
        with ThreadPoolExecutor(max_workers=_suite_workers(len(files))) as pool:
            entries = list(pool.map(run_one, files))
    else:
        entries = []
    report = {"scenarios": entries, "passed": all(e["passed"] for e in entries)}
    json.dump(report, report_out, indent=2)
    report_out.write("\n")
    return 0 if report["passed"] else 1
