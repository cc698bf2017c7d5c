"""Objective evaluation, constraint checking, exhaustive oracles and budget sweeps."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
from scipy.stats import binomtest

from .graph import (
    PlanGraph,
    Trajectory,
    build_graph,
    check_feasibility,
    shortest_tree,
    total_probability,
)
from .radio import SnrMap, build_snr_map
from .scenario import ScenarioConfig
from .solvers import (
    AcoParams,
    LagrangianParams,
    SolverReport,
    benchmark_shortest,
    improve_multi_waypoint,
    improve_single_detour,
    solve_lagrangian,
)
from .targetmap import TargetMap, blocked_mask, build_target_map, points_to_cells, sample_targets

__all__ = [
    "total_probability",
    "check_trajectory",
    "MonteCarloResult",
    "monte_carlo_validate",
    "OracleResult",
    "OracleTooLargeError",
    "brute_force_csp",
    "brute_force_max_prob",
    "Instance",
    "build_instance",
    "SweepRow",
    "SweepResult",
    "sweep",
]


def check_trajectory(t: Trajectory, g: PlanGraph, max_distance: Optional[float] = None) -> List[str]:
    """Constraint violations of ``t`` on ``g`` as human-readable strings (empty if valid).

    Grid indices in messages are 1-based.
    """
    problems = []
    w = t.waypoints
    one = lambda c: f"({c[0] + 1}, {c[1] + 1})"  # noqa: E731
    if w[0] != g.start:
        problems.append(f"first waypoint {one(w[0])} is not the start {one(g.start)}")
    if w[-1] != g.finish:
        problems.append(f"last waypoint {one(w[-1])} is not the finish {one(g.finish)}")
    for n, c in enumerate(w):
        if c not in g.index:
            problems.append(f"waypoint {n + 1} {one(c)} is outside the SNR-feasible set")
    for n, (a, b) in enumerate(zip(w, w[1:])):
        if max(abs(a[0] - b[0]), abs(a[1] - b[1])) != 1:
            problems.append(f"segment {n + 1} {one(a)} -> {one(b)} joins non-adjacent grids")
    if max_distance is not None and not t.distance <= max_distance:
        problems.append(f"distance {t.distance:.6g} m exceeds budget {max_distance:.6g} m")
    return problems


@dataclass(frozen=True)
class MonteCarloResult:
    rate: float
    ci_low: float
    ci_high: float
    analytic: float
    n_samples: int

    @property
    def analytic_inside(self) -> bool:
        return self.ci_low <= self.analytic <= self.ci_high


def monte_carlo_validate(t: Trajectory, config: ScenarioConfig, n_samples: int, rng=None,
                         target: Optional[TargetMap] = None, confidence: float = 0.99) -> MonteCarloResult:
    """Empirical sensing rate over targets drawn from the truncated mixture.

    A draw counts as sensed when its grid is among the distinct cells of
    ``t``. The interval is the exact (Clopper-Pearson) binomial interval.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    blocked = blocked_mask(config)
    if target is None:
        target = build_target_map(config, blocked)
    rng = np.random.default_rng(config.rng_seed if rng is None else rng)
    pts = sample_targets(config.mixture, n_samples, rng, config.grid, blocked)
    cells = points_to_cells(pts, config.grid)
    visited = np.zeros((config.dimension, config.dimension), dtype=bool)
    for c in t.waypoints:
        visited[c] = True
    hits = int(visited[cells[:, 0], cells[:, 1]].sum())
    ci = binomtest(hits, n_samples).proportion_ci(confidence_level=confidence, method="exact")
    return MonteCarloResult(hits / n_samples, float(ci.low), float(ci.high),
                            total_probability(t.waypoints, target), n_samples)


# -- exhaustive oracles -------------------------------------------------------

class OracleTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    optimum_value: float
    optimum_path: Trajectory
    paths_enumerated: int


def _distance_to_finish(g: PlanGraph) -> List[float]:
    return shortest_tree(g, g.index[g.finish], "distance")[0]


def _enumerate(g: PlanGraph, max_distance: float, score, bound, better):
    """Depth-first search over simple start-to-finish paths within budget.

    ``score(t)`` values a complete path, ``bound(ids, visited, travelled)`` gives an
    optimistic value for any completion (``None`` disables that pruning),
    ``better(a, b)`` is the strict preference.
    """
    s, f = g.index[g.start], g.index[g.finish]
    to_finish = _distance_to_finish(g)
    slack = 1e-9 * max(1.0, max_distance)
    if to_finish[s] > max_distance + slack:
        return None, 0
    best_val, best_ids, count = None, None, 0
    path = [s]
    on_path = [False] * len(g)
    on_path[s] = True

    def dfs(u: int, travelled: float):
        nonlocal best_val, best_ids, count
        if u == f:
            t = g.trajectory_from_ids(path)
            if t.distance <= max_distance:
                count += 1
                val = score(t)
                if best_val is None or better(val, best_val):
                    best_val, best_ids = val, list(path)
            return
        if bound is not None and best_val is not None:
            opt = bound(path, on_path, travelled)
            if not better(opt, best_val):
                return
        for v, wd in g.adjacency[u]:
            if on_path[v] or travelled + wd + to_finish[v] > max_distance + slack:
                continue
            path.append(v)
            on_path[v] = True
            dfs(v, travelled + wd)
            on_path[v] = False
            path.pop()

    dfs(s, 0.0)
    return (best_val, best_ids), count


def brute_force_csp(g: PlanGraph, max_distance: float, max_vertices: int = 20,
                    prune: bool = True) -> Optional[OracleResult]:
    """Minimum inverse-probability cost over all simple paths within budget.

    Returns ``None`` when no path fits the budget.
    """
    if len(g) > max_vertices:
        raise OracleTooLargeError(f"graph has {len(g)} vertices; exhaustive search capped at {max_vertices}")
    inv = g.inv_prob
    h = shortest_tree(g, g.index[g.finish], "inverse_prob")[0]

    def bound(path, _on_path, _travelled):
        u = path[-1]
        lb = math.fsum(inv[k] for k in path) + h[u] - inv[u]
        return lb - 1e-9 * max(1.0, lb)

    res, count = _enumerate(g, max_distance, lambda t: t.inverse_prob,
                            bound if prune else None, lambda a, b: a < b)
    if res is None or res[1] is None:
        return None
    val, ids = res
    return OracleResult(val, g.trajectory_from_ids(ids), count)


def brute_force_max_prob(g: PlanGraph, max_distance: float, max_vertices: int = 16,
                         prune: bool = True) -> Optional[OracleResult]:
    """Maximum total probability over all simple paths within budget."""
    if len(g) > max_vertices:
        raise OracleTooLargeError(f"graph has {len(g)} vertices; exhaustive search capped at {max_vertices}")
    probs = g.probs
    to_finish = _distance_to_finish(g)

    def bound(path, on_path, travelled):
        # later cells must still leave room to reach the finish
        room = max_distance - travelled + 1e-9 * max(1.0, max_distance)
        return math.fsum(p for k, p in enumerate(probs) if on_path[k] or to_finish[k] <= room) + 1e-12

    res, count = _enumerate(g, max_distance, lambda t: t.total_prob,
                            bound if prune else None, lambda a, b: a > b)
    if res is None or res[1] is None:
        return None
    val, ids = res
    return OracleResult(val, g.trajectory_from_ids(ids), count)


# -- instances and sweeps -----------------------------------------------------

@dataclass
class Instance:
    """Maps and graph built once from a scenario; solver timings exclude this."""

    config: ScenarioConfig
    snr: SnrMap
    target: TargetMap
    blocked: np.ndarray
    graph: PlanGraph


def build_instance(config: ScenarioConfig) -> Instance:
    snr = build_snr_map(config)
    blocked = blocked_mask(config)
    target = build_target_map(config, blocked)
    g = build_graph(snr, target, config.snr_threshold_db, config.grid, config.start, config.finish)
    return Instance(config, snr, target, blocked, g)


@dataclass(frozen=True)
class SweepRow:
    dbar_m: float
    solver: str
    initial: str
    total_prob: float
    f_d_m: float
    wallclock_s: float
    report: Optional[SolverReport] = field(default=None, compare=False, repr=False)

    @property
    def feasible(self) -> bool:
        return self.report is not None


SWEEP_COLUMNS = ("dbar_m", "solver", "initial", "total_prob", "f_d_m", "wallclock_s")


@dataclass
class SweepResult:
    rows: List[SweepRow]

    def select(self, solver: str, initial: str = "") -> List[SweepRow]:
        return [r for r in self.rows if r.solver == solver and r.initial == initial]

    @property
    def total_wallclock_s(self) -> float:
        return math.fsum(r.wallclock_s for r in self.rows)

    def best_total_prob(self) -> float:
        vals = [r.total_prob for r in self.rows if r.feasible]
        return max(vals) if vals else math.nan

    def to_csv(self) -> bytes:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in self.rows:
            w.writerow([repr(float(r.dbar_m)), r.solver, r.initial, repr(float(r.total_prob)),
                        repr(float(r.f_d_m)), repr(float(r.wallclock_s))])
        return buf.getvalue().encode("utf-8")


def run_solver(inst: Instance, solver: str, max_distance: float, *, initial: Optional[SolverReport] = None,
               lagrangian: LagrangianParams = LagrangianParams(), aco: AcoParams = AcoParams(),
               n_detour: int = 10, n_extra: int = 10) -> SolverReport:
    """Dispatch one planner; ``sol2``/``sol3`` need ``initial``."""
    g = inst.graph
    if solver == "benchmark":
        return benchmark_shortest(g, max_distance)
    if solver == "sol1":
        return solve_lagrangian(g, max_distance, lagrangian)
    if initial is None:
        raise ValueError(f"{solver} needs an initial trajectory")
    if solver == "sol2":
        return improve_single_detour(g, initial.trajectory, n_detour, max_distance, initial.solver_tag)
    if solver == "sol3":
        return improve_multi_waypoint(g, initial.trajectory, n_extra, max_distance, aco, initial.solver_tag)
    raise ValueError(f"unknown solver {solver!r}")


def sweep(config_or_instance, dbar_list: Iterable[float], solvers: Sequence[str] = ("benchmark", "sol1", "sol2", "sol3"),
          seed: Optional[int] = None, *, initials: Sequence[str] = ("sol1", "benchmark"),
          lagrangian: LagrangianParams = LagrangianParams(), aco: AcoParams = AcoParams(),
          n_detour: int = 10, n_extra: int = 10, timing: bool = True) -> SweepResult:
    """Run every solver at every budget.

    Improvement solvers run once per entry of ``initials``. Infeasible
    budgets produce rows with NaN metrics. With ``timing=False`` the
    wallclock column is written as 0 so outputs are byte-reproducible.
    """
    solvers = list(solvers)
    if not solvers:
        raise ValueError("empty solver list")
    unknown = set(solvers) - {"benchmark", "sol1", "sol2", "sol3"}
    if unknown:
        raise ValueError(f"unknown solvers {sorted(unknown)}")
    inst = config_or_instance if isinstance(config_or_instance, Instance) else build_instance(config_or_instance)
    if seed is not None:
        aco = AcoParams(**{**aco.__dict__, "rng_seed": seed})
    rows: List[SweepRow] = []
    nan = math.nan

    def add(dbar, tag, init, rep):
        if rep is None:
            rows.append(SweepRow(dbar, tag, init, nan, nan, 0.0))
        else:
            rows.append(SweepRow(dbar, tag, init, rep.trajectory.total_prob, rep.trajectory.distance,
                                 rep.wallclock_s if timing else 0.0, rep))

    for dbar in dbar_list:
        dbar = float(dbar)
        feasible = check_feasibility(inst.graph, dbar).feasible
        bases: Dict[str, SolverReport] = {}
        for tag in ("benchmark", "sol1"):
            needed = tag in solvers or (tag in initials and ({"sol2", "sol3"} & set(solvers)))
            if needed and feasible:
                bases[tag] = run_solver(inst, tag, dbar, lagrangian=lagrangian)
            if tag in solvers:
                add(dbar, tag, "", bases.get(tag))
        for tag in ("sol2", "sol3"):
            if tag not in solvers:
                continue
            for init in initials:
                rep = None
                if feasible:
                    rep = run_solver(inst, tag, dbar, initial=bases[init], aco=aco,
                                     n_detour=n_detour, n_extra=n_extra)
                add(dbar, tag, init, rep)
    return SweepResult(rows)
