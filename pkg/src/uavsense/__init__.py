"""Sensing-probability trajectory planning for a cellular-connected UAV."""
from .evaluation import (
    Instance,
    build_instance,
    brute_force_csp,
    brute_force_max_prob,
    check_trajectory,
    monte_carlo_validate,
    sweep,
)
from .graph import (
    InfeasibleError,
    PlanGraph,
    Trajectory,
    build_graph,
    check_feasibility,
    dijkstra,
    path_distance,
    path_inverse_prob,
    total_probability,
    yen_k_shortest,
)
from .radio import SnrMap, build_snr_map, import_snr_map, large_scale_gain, line_of_sight
from .scenario import (
    ChannelParams,
    Gbs,
    GmmComponent,
    GridSpec,
    Obstacle,
    ScenarioConfig,
    ScenarioError,
    ValidationError,
    grid_center,
    load_scenario,
    save_scenario,
)
from .solvers import (
    AcoParams,
    LagrangianParams,
    SolverReport,
    aco_path_tsp,
    benchmark_shortest,
    improve_multi_waypoint,
    improve_single_detour,
    solve_lagrangian,
)
from .targetmap import TargetMap, build_target_map, gmm_pdf, grid_probability, sample_target

__version__ = "0.1.0"

__all__ = [
    "aco_path_tsp",
    "AcoParams",
    "benchmark_shortest",
    "brute_force_csp",
    "brute_force_max_prob",
    "build_graph",
    "build_instance",
    "build_snr_map",
    "build_target_map",
    "ChannelParams",
    "check_feasibility",
    "check_trajectory",
    "dijkstra",
    "Gbs",
    "gmm_pdf",
    "GmmComponent",
    "grid_center",
    "grid_probability",
    "GridSpec",
    "import_snr_map",
    "improve_multi_waypoint",
    "improve_single_detour",
    "InfeasibleError",
    "Instance",
    "LagrangianParams",
    "large_scale_gain",
    "line_of_sight",
    "load_scenario",
    "monte_carlo_validate",
    "Obstacle",
    "path_distance",
    "path_inverse_prob",
    "PlanGraph",
    "sample_target",
    "save_scenario",
    "ScenarioConfig",
    "ScenarioError",
    "SnrMap",
    "solve_lagrangian",
    "SolverReport",
    "sweep",
    "TargetMap",
    "total_probability",
    "Trajectory",
    "ValidationError",
    "yen_k_shortest",
]
