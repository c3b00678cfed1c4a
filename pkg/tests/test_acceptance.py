"""End-to-end acceptance suite.

Each test implements one release criterion at its stated tolerance and
prints a single PASS/FAIL line (run with ``pytest -s`` to see them).
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.ndimage import gaussian_filter

from actuator_opt import (
    ActuatorPath,
    CostMap,
    CostMapParams,
    GridGeometry,
    KinematicConstraints,
    NoPathError,
    OccupancyGrid,
    PerturbationParams,
    SolverConfig,
    SpeedParams,
    WorldPath,
    WorldPose,
    actuator_to_world,
    astar,
    curvature_speeds,
    halo_field,
    headings_from_positions,
    interior_distance,
    parse_scenario,
    perturb,
    plan_speeds,
    run_scenario,
    solve,
    world_to_actuator,
)
from actuator_opt.base_planner import CellIndex
from actuator_opt.scenario import run_suite

from oracles import (
    brute_force_halo,
    brute_force_interior_distance,
    cell_run_cost,
    dijkstra_cost,
    exhaustive_three_step_optimum,
    random_grid,
)

SCENARIOS = Path(__file__).parent.parent / "scenarios"


def report(number, name, passed, detail=""):
    status = "PASS" if passed else "FAIL"
    print(f"ACCEPTANCE {number} {name}: {status} {detail}".rstrip())
    assert passed, f"criterion {number} ({name}) failed: {detail}"


def test_01_transform_roundtrip():
    rng = np.random.default_rng(1001)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 201))
        steps = rng.uniform(0.05, 2.0, size=n - 1)
        turns = rng.uniform(-0.8, 0.8, size=n - 1)
        heading = np.cumsum(turns) + rng.uniform(-math.pi, math.pi)
        xy = np.zeros((n, 2))
        xy[1:, 0] = np.cumsum(np.cos(heading) * steps)
        xy[1:, 1] = np.cumsum(np.sin(heading) * steps)
        xy += rng.uniform(-100, 100, size=2)
        world = WorldPath(xy, headings_from_positions(xy))

        act = world_to_actuator(world)
        world2 = actuator_to_world(act)
        worst = max(worst, float(np.abs(world2.xy - world.xy).max()))
        worst = max(worst, float(np.abs(world2.thetas - world.thetas).max()))

        act2 = world_to_actuator(world2)
        worst = max(worst, float(np.abs(act2.phis - act.phis).max()))
        worst = max(worst, float(np.abs(act2.drs - act.drs).max()))
    elapsed = time.perf_counter() - t0
    report(1, "transform roundtrip", worst < 1e-9 and elapsed < 5.0,
           f"(worst dev {worst:.2e}, {elapsed:.1f}s)")


def test_02_costmap_oracle_equivalence():
    rng = np.random.default_rng(1002)
    t0 = time.perf_counter()
    exact = True
    for _ in range(100):
        hard, _, h, w, res = random_grid(rng, max_size=64)
        geometry = GridGeometry(w, h, res)
        halo_r = float(rng.uniform(0.5, 5.0))
        if not np.array_equal(interior_distance(hard, geometry),
                              brute_force_interior_distance(hard, res)):
            exact = False
            break
        if not np.array_equal(halo_field(hard, halo_r, geometry),
                              brute_force_halo(hard, halo_r, res)):
            exact = False
            break
    elapsed = time.perf_counter() - t0
    report(2, "costmap oracle equivalence", exact and elapsed < 30.0,
           f"(100 grids, {elapsed:.1f}s)")


def test_03_astar_matches_dijkstra():
    rng = np.random.default_rng(1003)
    t0 = time.perf_counter()
    solved = 0
    ok = True
    while solved < 100:
        cost = rng.uniform(0, 25, size=(64, 64))
        cost[rng.random((64, 64)) < 0.18] = 1500.0
        cmap = CostMap(GridGeometry(64, 64, float(rng.uniform(0.2, 1.0))),
                       cost, 1000.0)
        lethal = cmap.lethal_mask()
        free = np.argwhere(~lethal)
        sr, sc = free[rng.integers(0, len(free))]
        gr, gc = free[rng.integers(0, len(free))]
        start, goal = CellIndex(int(sc), int(sr)), CellIndex(int(gc), int(gr))
        want = dijkstra_cost(cmap.cost, lethal, cmap.geometry.resolution,
                             start, goal, 1.0)
        if math.isinf(want):
            with pytest.raises(NoPathError):
                astar(cmap, start, goal, 1.0)
            continue
        path = astar(cmap, start, goal, 1.0)
        got = cell_run_cost(cmap.cost, cmap.geometry.resolution, path.cells, 1.0)
        if not math.isclose(got, want, rel_tol=1e-9, abs_tol=1e-12):
            ok = False
            break
        solved += 1
    elapsed = time.perf_counter() - t0
    report(3, "A* equals Dijkstra", ok and elapsed < 60.0,
           f"(100 maps, {elapsed:.1f}s)")


def test_04_solver_descent_and_fixed_point():
    flat = CostMap(GridGeometry(64, 64, 0.5), np.zeros((64, 64)), 1000.0)
    straight = ActuatorPath.with_constant_dr(WorldPose(2, 10, 0), np.zeros(40), 0.5)
    out, rep = solve(straight, flat, KinematicConstraints())
    fixed_point = (rep.accepted_perturbations == 0
                   and np.array_equal(out.phis, straight.phis)
                   and np.array_equal(out.drs, straight.drs))
    monotone = True
    for name in ("straight_line", "narrow_gap", "rock_pile"):
        result = run_scenario(parse_scenario(SCENARIOS / f"{name}.scenario"))
        sweeps = np.asarray(result.report.sweep_costs)
        monotone &= bool((np.diff(sweeps) <= 1e-9).all())
        monotone &= result.report.final_cost.total <= result.report.initial_cost.total
    report(4, "solver descent + fixed point", fixed_point and monotone,
           f"(fixed point accepts=0: {fixed_point}, sweeps non-increasing: {monotone})")


def test_05_solver_near_optimality_tiny():
    rng = np.random.default_rng(2024)
    k = KinematicConstraints()
    pparams = PerturbationParams()
    config = SolverConfig(max_iterations=100, improvement_tolerance=0.0)
    t0 = time.perf_counter()
    worst_ratio = 0.0
    for _ in range(20):
        field = gaussian_filter(rng.uniform(0, 30, size=(16, 16)), sigma=2.0)
        cmap = CostMap(GridGeometry(16, 16, 1.0), field, 1000.0)
        origin = WorldPose(float(rng.uniform(5, 10)), float(rng.uniform(5, 10)),
                           float(rng.uniform(-math.pi, math.pi)))
        seed = ActuatorPath.with_constant_dr(origin, np.zeros(3), 0.5)
        _, rep = solve(seed, cmap, k, pparams, config)
        best = exhaustive_three_step_optimum(cmap, origin, 0.5, k,
                                             pparams.probe_delta / 2)
        worst_ratio = max(worst_ratio, rep.final_cost.total / best)
    elapsed = time.perf_counter() - t0
    report(5, "near-optimality on 3-step instances",
           worst_ratio <= 1.10 and elapsed < 120.0,
           f"(worst ratio {worst_ratio:.4f}, {elapsed:.1f}s)")


def test_06_narrow_gap_scenario():
    sc = parse_scenario(SCENARIOS / "narrow_gap.scenario")
    result = run_scenario(sc)
    # the raw grid-search seed must break the rate bound at the corners
    base = result.base_path
    base_phis = np.diff(base.thetas)
    base_phis = np.mod(base_phis + np.pi, 2 * np.pi) - np.pi
    base_violates = float(np.abs(np.diff(base_phis)).max()) > sc.constraints.phi_rate_max
    within_phi = result.metrics.max_phi <= sc.constraints.phi_max
    within_rate = result.metrics.max_phi_rate <= sc.constraints.phi_rate_max
    collision_free = not result.metrics.collision
    report(6, "narrow gap",
           base_violates and within_phi and within_rate and collision_free,
           f"(seed rate {np.abs(np.diff(base_phis)).max():.2f} > "
           f"{sc.constraints.phi_rate_max}, optimized phi {result.metrics.max_phi:.3f}, "
           f"rate {result.metrics.max_phi_rate:.4f}, collision {result.metrics.collision})")


def test_07_damping_pins_the_tail():
    path = ActuatorPath.with_constant_dr(WorldPose(0, 0, 0), np.zeros(60), 0.4)
    w0 = actuator_to_world(path)
    worst = 0.0
    for delta in (0.01, -0.01, 0.1, 0.3):
        out = perturb(path, 5, delta, 25)
        w1 = actuator_to_world(out)
        worst = max(worst, float(np.abs(w1.xy[31:] - w0.xy[31:]).max()))
    report(7, "damped perturbation containment", worst < 1e-6,
           f"(max tail deviation {worst:.2e} m)")


def test_08_speed_profile():
    params = SpeedParams(v_min=2.0, v_max=5.0, gamma=0.1, a_max=2.0, d_max=3.0)
    flat = ActuatorPath.with_constant_dr(WorldPose(0, 0, 0), [0.0, 0.0], 0.4)
    sharp = ActuatorPath.with_constant_dr(WorldPose(0, 0, 0), [0.1, 0.25], 0.4)
    points_ok = (curvature_speeds(flat, params)[0] == 5.0
                 and curvature_speeds(sharp, params)[0] == 2.0
                 and curvature_speeds(sharp, params)[1] == 2.0)
    rng = np.random.default_rng(1008)
    feasible = True
    terminal = True
    for _ in range(50):
        n = int(rng.integers(1, 80))
        dr = float(rng.uniform(0.2, 1.0))
        path = ActuatorPath.with_constant_dr(
            WorldPose(0, 0, 0), rng.uniform(-0.3, 0.3, size=n), dr)
        v = plan_speeds(path, params,
                        initial_speed=float(rng.uniform(0, 5))).speeds
        dv2 = np.diff(v ** 2)
        feasible &= bool((dv2 <= 2 * params.a_max * dr + 1e-9).all())
        feasible &= bool((-dv2 <= 2 * params.d_max * dr + 1e-9).all())
        terminal &= v[-1] == 0.0
    report(8, "speed profile", points_ok and feasible and terminal,
           f"(point checks {points_ok}, accel bounds {feasible}, terminal zero {terminal})")


def _throughput_scenario(tmp_path):
    res, hw = 0.2, 512
    yy, xx = np.meshgrid(np.arange(hw) * res, np.arange(hw) * res, indexing="ij")
    hard = np.zeros((hw, hw), bool)
    soft = np.zeros((hw, hw), bool)
    for cx, cy, r, kind in [(35, 48, 2.5, "h"), (55, 55, 3.0, "h"), (70, 47, 2.0, "h"),
                            (45, 52.5, 1.5, "s"), (62, 50, 1.8, "s"), (30, 55, 2.2, "s")]:
        blob = (xx - cx) ** 2 + (yy - cy) ** 2 <= r ** 2
        if kind == "h":
            hard |= blob
        else:
            soft |= blob
    rows = np.full((hw, hw), ord("."), dtype=np.uint8)
    rows[soft] = ord("s")
    rows[hard] = ord("h")
    lines = [f"grid {hw} {hw} {res} 0.0 0.0"]
    lines += [bytes(r).decode("ascii") for r in rows]
    (tmp_path / "bench.grid").write_text("\n".join(lines) + "\n")
    (tmp_path / "bench.scenario").write_text(
        "[map]\ngrid = bench.grid\n"
        "[vehicle]\nstart_x = 21.0\nstart_y = 51.2\nstart_theta = 0.0\n"
        "goal_x = 81.0\ngoal_y = 51.2\ndr = 0.4\n"
        "[costmap]\nrobot_radius = 0.6\nhalo_radius = 2.0\n")
    return parse_scenario(tmp_path / "bench.scenario")


def test_09_pipeline_throughput(tmp_path):
    sc = _throughput_scenario(tmp_path)
    result = run_scenario(sc)  # warm run (jit cache, page cache)
    steps = len(result.optimized_path) - 1
    assert 120 <= steps <= 200  # "~150-step path"
    times = []
    for _ in range(10):
        t0 = time.perf_counter()
        run_scenario(sc)
        times.append(time.perf_counter() - t0)
    times.sort()
    median = (times[4] + times[5]) / 2
    report(9, "pipeline throughput", median < 0.5,
           f"({steps}-step path, median {median * 1e3:.0f} ms over 10 runs)")


def test_bundled_suite_passes(tmp_path):
    import io
    out = io.StringIO()
    status = run_suite(SCENARIOS, out, out_dir=tmp_path)
    assert status == 0
