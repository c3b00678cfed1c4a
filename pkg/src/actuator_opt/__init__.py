"""Actuator-space path optimization for ground vehicles.

Binary obstacle grids become a continuous cost map, an 8-connected A*
search seeds a path, the path is re-expressed as steering deltas over
constant-length steps and refined by a damped coordinate-descent solver
under kinematic limits, and the result is speed-profiled under
acceleration limits.
"""

from .actuator_path import (
    ActuatorPath,
    ActuatorStep,
    DegenerateSegmentError,
    WorldPath,
    WorldPose,
    actuator_path_from_dict,
    actuator_path_to_dict,
    actuator_to_world,
    headings_from_positions,
    resample_cell_path,
    world_path_from_dict,
    world_path_to_dict,
    world_to_actuator,
    wrap_angle,
    wrap_angles,
)
from .base_planner import (
    CellIndex,
    CellPath,
    InvalidEndpointError,
    NoPathError,
    PlanningError,
    astar,
    clip_goal,
    plan_base_path,
)
from .cost_model import (
    CostBreakdown,
    KinematicConstraints,
    kinematic_cost,
    map_cost,
    penalty,
    sample_cost,
    total_cost,
)
from .costmap import (
    CostMap,
    CostMapParams,
    GridFormatError,
    GridGeometry,
    OccupancyGrid,
    build_costmap,
    dilate,
    dump_costmap,
    halo_field,
    interior_distance,
    load_obstacle_grid,
)
from .optimizer import PerturbationParams, SolveReport, SolverConfig, perturb, solve
from .render import render_svg
from .scenario import (
    Assertion,
    Metrics,
    RunResult,
    Scenario,
    ScenarioError,
    compute_metrics,
    evaluate_assertions,
    parse_scenario,
    result_from_dict,
    result_to_dict,
    run_scenario,
    run_suite,
    run_with_replans,
)
from .speed_planner import (
    SpeedParams,
    SpeedProfile,
    accel_limit,
    curvature_speeds,
    plan_speeds,
)

__version__ = "0.1.0"
