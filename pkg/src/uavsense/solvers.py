"""Trajectory planners.

* :func:`benchmark_shortest` - shortest-distance SNR-feasible path.
* :func:`solve_lagrangian` - Lagrangian relaxation of the constrained
  inverse-probability path problem with K-shortest-path primal recovery.
* :func:`improve_single_detour` - best single detour to a high-probability cell.
* :func:`improve_multi_waypoint` - fixed-endpoint path-TSP over the initial
  waypoints plus extra high-probability cells, solved with ACO.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.sparse.csgraph import minimum_spanning_tree

from .graph import (
    InfeasibleError,
    PlanGraph,
    Trajectory,
    check_feasibility,
    iter_shortest_simple_paths,
    shortest_ids,
    shortest_tree,
    _unwind,
)
from .scenario import GridIndex

SOLVER_TAGS = ("benchmark", "sol1", "sol2", "sol3")


@dataclass(frozen=True)
class LagrangianParams:
    lambda_tolerance: float = 1e-6
    max_bisection_iters: int = 64
    K: int = 100

    def __post_init__(self):
        if not self.lambda_tolerance > 0:
            raise ValueError("lambda_tolerance must be positive")
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.max_bisection_iters < 0:
            raise ValueError("max_bisection_iters must be non-negative")


@dataclass(frozen=True)
class AcoParams:
    ants: int = 32
    iterations: int = 200
    pheromone_influence: float = 1.0
    heuristic_influence: float = 3.0
    evaporation: float = 0.5
    rng_seed: int = 0
    two_opt: bool = True

    def __post_init__(self):
        if self.ants < 1 or self.iterations < 1:
            raise ValueError("ants and iterations must be at least 1")
        if not 0 < self.evaporation < 1:
            raise ValueError("evaporation must lie in (0, 1)")


@dataclass(frozen=True)
class SolverReport:
    trajectory: Trajectory
    solver_tag: str
    wallclock_s: float
    dual_bound: Optional[float] = None
    initial_tag: Optional[str] = None
    details: dict = field(default_factory=dict)


def _require_feasible(g: PlanGraph, max_distance: float):
    feas = check_feasibility(g, max_distance)
    if not feas.feasible:
        raise InfeasibleError(
            f"shortest feasible distance {feas.shortest_distance:.6g} m exceeds budget {max_distance:.6g} m"
        )
    return feas


def benchmark_shortest(g: PlanGraph, max_distance: float) -> SolverReport:
    t0 = time.perf_counter()
    feas = _require_feasible(g, max_distance)
    return SolverReport(feas.trajectory, "benchmark", time.perf_counter() - t0)


# -- Solution I ---------------------------------------------------------------

def _close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def solve_lagrangian(g: PlanGraph, max_distance: float,
                     params: LagrangianParams = LagrangianParams()) -> SolverReport:
    """Dual search over the multiplier, then K-shortest-path primal recovery.

    The multiplier is updated from a bracket of an infeasible path with
    small inverse-probability cost and a feasible path with small distance:
    ``lam = (fP(p_P) - fP(p_D)) / (fD(p_D) - fD(p_P))``. Each step solves one
    shortest path under ``W_P + lam * W_D``; the new path replaces the
    bracket end on its side of the budget until its aggregated cost meets
    the bracket's.
    """
    t0 = time.perf_counter()
    feas = _require_feasible(g, max_distance)
    s, f = g.index[g.start], g.index[g.finish]

    p_prob = g.trajectory_from_ids(shortest_ids(g, s, f, "inverse_prob")[1])
    if p_prob.distance <= max_distance:
        return SolverReport(p_prob, "sol1", time.perf_counter() - t0,
                            dual_bound=p_prob.inverse_prob, details={"lambda": 0.0, "iterations": 0})

    p_dist = feas.trajectory
    best_dual = p_prob.inverse_prob  # dual function at lam = 0
    lam_star = 0.0
    iterations = 0
    for iterations in range(1, params.max_bisection_iters + 1):
        lam = (p_prob.inverse_prob - p_dist.inverse_prob) / (p_dist.distance - p_prob.distance)
        lam = max(lam, 0.0)
        cost, ids = shortest_ids(g, s, f, lam)
        dual = cost - lam * max_distance
        if dual > best_dual:
            best_dual, lam_star = dual, lam
        bracket = p_prob.inverse_prob + lam * p_prob.distance
        if cost >= bracket or _close(cost, bracket, params.lambda_tolerance):
            break
        r = g.trajectory_from_ids(ids)
        if r.distance <= max_distance:
            p_dist = r
        else:
            p_prob = r

    # Primal recovery. A feasible path q has fP(q) >= L(q) - lam * D_bar, so
    # once the enumerated aggregated cost exceeds best fP + lam * D_bar no
    # later path can improve on the incumbent.
    best = p_dist
    enumerated = 0
    for cost, ids in iter_shortest_simple_paths(g, s, f, lam_star):
        enumerated += 1
        if cost - lam_star * max_distance > best.inverse_prob * (1 + 1e-12):
            break
        t = g.trajectory_from_ids(ids)
        if t.distance <= max_distance and t.inverse_prob < best.inverse_prob:
            best = t
        if enumerated >= params.K:
            break

    return SolverReport(
        best, "sol1", time.perf_counter() - t0, dual_bound=best_dual,
        details={"lambda": lam_star, "iterations": iterations, "paths_enumerated": enumerated},
    )


# -- candidate ranking shared by Solutions II and III ------------------------

def unvisited_by_probability(g: PlanGraph, trajectory: Trajectory) -> List[GridIndex]:
    """Feasible cells off ``trajectory``, most probable first (ties by index)."""
    on_path = set(trajectory.waypoints)
    rest = [v for v in g.vertices if v not in on_path]
    return sorted(rest, key=lambda v: (-float(g.target.probs[v]), v))


def _nearest_position(waypoints: Sequence[GridIndex], cell: GridIndex) -> int:
    best_n, best_d = 0, math.inf
    for n, w in enumerate(waypoints):
        d = math.hypot(w[0] - cell[0], w[1] - cell[1])
        if d < best_d:
            best_n, best_d = n, d
    return best_n


# -- Solution II --------------------------------------------------------------

def improve_single_detour(g: PlanGraph, initial: Trajectory, n_candidates: int,
                          max_distance: float, initial_tag: Optional[str] = None) -> SolverReport:
    """Try one detour per top-ranked unvisited cell and keep the most probable feasible path."""
    t0 = time.perf_counter()
    wps = initial.waypoints
    f = g.index[g.finish]
    best = initial
    tried = 0
    for cell in unvisited_by_probability(g, initial)[:max(0, n_candidates)]:
        tried += 1
        n = _nearest_position(wps, cell)
        c = g.index[cell]
        leg1 = shortest_ids(g, g.index[wps[n]], c, "distance")
        leg2 = shortest_ids(g, c, f, "distance")
        if leg1 is None or leg2 is None:
            continue
        ids = [g.index[w] for w in wps[: n + 1]] + leg1[1][1:] + leg2[1][1:]
        t = g.trajectory_from_ids(ids)
        if t.distance <= max_distance and t.total_prob > best.total_prob:
            best = t
    return SolverReport(best, "sol2", time.perf_counter() - t0, initial_tag=initial_tag,
                        details={"candidates": tried})


# -- Solution III -------------------------------------------------------------

def remove_redundant_loops(waypoints: Sequence[GridIndex], probs: np.ndarray) -> List[GridIndex]:
    """Cut closed sub-walks whose removal keeps the distinct-cell probability.

    A sub-walk between two visits of the same cell can go when every cell
    on it is visited elsewhere or has zero probability.
    """
    path = list(waypoints)
    changed = True
    while changed:
        changed = False
        first_seen = {}
        for b, cell in enumerate(path):
            a = first_seen.get(cell)
            if a is None:
                first_seen[cell] = b
                continue
            remaining = path[: a + 1] + path[b + 1:]
            kept = set(remaining)
            if all(c in kept or probs[c] == 0 for c in path[a + 1: b + 1]):
                path = remaining
                changed = True
                break
    return path


def _path_tsp_lower_bound(dist: np.ndarray, nodes: Sequence[int]) -> float:
    sub = dist[np.ix_(nodes, nodes)]
    # csgraph treats explicit zeros as missing edges
    sub = np.where(sub == 0, 1e-300, sub)
    np.fill_diagonal(sub, 0.0)
    return float(minimum_spanning_tree(sub).sum())


def _nearest_neighbor_tour(dist: np.ndarray, first: int, last: int) -> List[int]:
    todo = [k for k in range(len(dist)) if k not in (first, last)]
    tour = [first]
    while todo:
        cur = tour[-1]
        nxt = min(todo, key=lambda k: (dist[cur, k], k))
        tour.append(nxt)
        todo.remove(nxt)
    tour.append(last)
    return tour


def _tour_length(dist: np.ndarray, tour: Sequence[int]) -> float:
    return math.fsum(dist[a, b] for a, b in zip(tour, tour[1:]))


def _two_opt(dist: np.ndarray, tour: List[int]) -> List[int]:
    """Segment reversals that shorten the tour; endpoints stay fixed."""
    tour = list(tour)
    improved = True
    while improved:
        improved = False
        for i in range(1, len(tour) - 2):
            for k in range(i + 1, len(tour) - 1):
                a, b, c, d = tour[i - 1], tour[i], tour[k], tour[k + 1]
                delta = dist[a, c] + dist[b, d] - dist[a, b] - dist[c, d]
                if delta < -1e-9:
                    tour[i: k + 1] = tour[i: k + 1][::-1]
                    improved = True
    return tour


def aco_path_tsp(dist: np.ndarray, first: int, last: int,
                 params: AcoParams = AcoParams(), rng=None) -> Optional[List[int]]:
    """Shortest Hamiltonian path from ``first`` to ``last`` by ant colony search.

    Returns ``None`` when some pair of waypoints is unreachable. The
    nearest-neighbour tour seeds the pheromone level and the incumbent.
    """
    dist = np.asarray(dist, dtype=float)
    W = dist.shape[0]
    if W < 2 or first == last:
        raise ValueError("need at least two waypoints with distinct first and last positions")
    if not np.all(np.isfinite(dist)):
        return None
    if W == 2:
        return [first, last]
    rng = np.random.default_rng(params.rng_seed if rng is None else rng)

    best = _nearest_neighbor_tour(dist, first, last)
    best_len = _tour_length(dist, best)
    positive = dist[dist > 0]
    floor = positive.min() * 1e-3 if positive.size else 1.0
    eta = (1.0 / np.maximum(dist, floor)) ** params.heuristic_influence
    tau = np.full((W, W), 1.0 / (W * max(best_len, floor)))

    interior = np.ones(W, dtype=bool)
    interior[[first, last]] = False
    A = params.ants
    rows = np.arange(A)
    for _ in range(params.iterations):
        tours = np.empty((A, W), dtype=int)
        tours[:, 0] = first
        tours[:, -1] = last
        allowed = np.tile(interior, (A, 1))
        cur = np.full(A, first)
        attract = tau ** params.pheromone_influence * eta
        for step in range(1, W - 1):
            w = attract[cur] * allowed
            cum = np.cumsum(w, axis=1)
            pick = (cum < rng.random(A)[:, None] * cum[:, -1:]).sum(axis=1)
            pick = np.minimum(pick, W - 1)
            # guard against rounding landing on a disallowed column
            bad = ~allowed[rows, pick]
            if bad.any():
                pick[bad] = np.argmax(allowed[bad], axis=1)
            tours[:, step] = pick
            allowed[rows, pick] = False
            cur = pick
        lengths = dist[tours[:, :-1], tours[:, 1:]].sum(axis=1)
        k = int(np.argmin(lengths))
        if lengths[k] < best_len - 1e-9:
            best, best_len = tours[k].tolist(), float(lengths[k])
        tau *= 1.0 - params.evaporation
        for t, length in zip(tours, lengths):
            dep = 1.0 / max(length, floor)
            tau[t[:-1], t[1:]] += dep
            tau[t[1:], t[:-1]] += dep
        bt = np.asarray(best)
        dep = 1.0 / max(best_len, floor)
        tau[bt[:-1], bt[1:]] += dep
        tau[bt[1:], bt[:-1]] += dep
    if params.two_opt:
        best = _two_opt(dist, best)
    return [int(x) for x in best]


def improve_multi_waypoint(g: PlanGraph, initial: Trajectory, n_candidates: int,
                           max_distance: float, aco: AcoParams = AcoParams(),
                           initial_tag: Optional[str] = None) -> SolverReport:
    """Tour the initial waypoints plus the top ``r`` unvisited cells, ``r`` from
    ``n_candidates`` down to 0, keeping the first expansion within budget.

    The tour is found on the metric closure of the waypoint set and expanded
    by stitching stored shortest paths; redundant loops are then cut. If no
    ``r`` fits the budget the initial trajectory is returned unchanged.
    """
    t0 = time.perf_counter()
    s_cell, f_cell = g.start, g.finish
    base = [w for w in dict.fromkeys(initial.waypoints) if w not in (s_cell, f_cell)]
    extra = unvisited_by_probability(g, initial)[:max(0, n_candidates)]
    cells = [s_cell] + base + extra + [f_cell]
    ids = [g.index[c] for c in cells]

    trees = {}
    for v in dict.fromkeys(ids):
        trees[v] = shortest_tree(g, v, "distance")
    full = np.array([[trees[a][0][b] for b in ids] for a in ids])
    np.fill_diagonal(full, 0.0)
    probs = g.target.probs

    n_base = 1 + len(base)
    for r in range(len(extra), -1, -1):
        sel = list(range(n_base + r)) + [len(cells) - 1]
        dist = full[np.ix_(sel, sel)]
        if not np.all(np.isfinite(dist)):
            continue
        must = [k for k, pos in enumerate(sel) if probs[cells[pos]] > 0 or k in (0, len(sel) - 1)]
        if _path_tsp_lower_bound(dist, must) > max_distance * (1 + 1e-12):
            continue
        tour = aco_path_tsp(dist, 0, len(sel) - 1, aco, rng=np.random.default_rng([aco.rng_seed, r]))
        if tour is None:
            continue
        walk = [ids[sel[tour[0]]]]
        for a, b in zip(tour, tour[1:]):
            u, v = ids[sel[a]], ids[sel[b]]
            if u == v:
                continue
            walk.extend(_unwind(trees[u][1], u, v)[1:])
        cells_walk = remove_redundant_loops([g.vertices[k] for k in walk], probs)
        t = g.trajectory(cells_walk)
        if t.distance <= max_distance:
            return SolverReport(t, "sol3", time.perf_counter() - t0, initial_tag=initial_tag,
                                details={"extra_waypoints": r})
    return SolverReport(initial, "sol3", time.perf_counter() - t0, initial_tag=initial_tag,
                        details={"extra_waypoints": 0, "fallback": True})
