"""Dual-weighted grid graph over SNR-feasible cells, with shortest-path primitives.

Every edge carries a distance weight (center-to-center length) and a
probability weight (inverse target probability of the cell being entered).
Path searches take a ``weight`` selector:

* ``"distance"``: distance weight only,
* ``"inverse_prob"``: probability weight only,
* a float ``lam``: the aggregated weight ``W_P + lam * W_D``.

Aggregated path costs include the inverse probability of the first cell so
they equal ``f_P + lam * f_D`` exactly; this constant never changes an argmin.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .radio import SnrMap, db_to_linear
from .scenario import GridIndex, GridSpec
from .targetmap import TargetMap

Weight = Union[str, float, Tuple[float, float]]

_NEIGHBOR_STEPS = [(di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1) if (di, dj) != (0, 0)]


class InfeasibleError(Exception):
    """No trajectory can satisfy the SNR and distance constraints."""


def _coefficients(weight: Weight) -> Tuple[float, float]:
    if isinstance(weight, str):
        if weight == "distance":
            return 0.0, 1.0
        if weight == "inverse_prob":
            return 1.0, 0.0
        raise ValueError(f"unknown weight {weight!r}")
    if isinstance(weight, tuple):
        return float(weight[0]), float(weight[1])
    lam = float(weight)
    if lam < 0:
        raise ValueError("Lagrange multiplier must be non-negative")
    return 1.0, lam


def step_length(a: GridIndex, b: GridIndex, granularity: float) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1]) * granularity


def path_distance(waypoints: Sequence[GridIndex], granularity: float) -> float:
    """Sum of center-to-center segment lengths."""
    return math.fsum(step_length(a, b, granularity) for a, b in zip(waypoints, waypoints[1:]))


def path_inverse_prob(waypoints: Sequence[GridIndex], target: TargetMap) -> float:
    """Sum of floored inverse probabilities over every waypoint, first one included."""
    inv = target.inverse_weights
    return math.fsum(inv[w] for w in waypoints)


def total_probability(waypoints: Sequence[GridIndex], target: TargetMap) -> float:
    """Target mass over the distinct cells visited; revisits count once."""
    return math.fsum(float(target.probs[w]) for w in dict.fromkeys(waypoints))


@dataclass(frozen=True)
class Trajectory:
    waypoints: Tuple[GridIndex, ...]
    distance: float
    inverse_prob: float
    total_prob: float

    @classmethod
    def from_waypoints(cls, waypoints: Sequence[GridIndex], granularity: float, target: TargetMap) -> "Trajectory":
        wps = tuple((int(i), int(j)) for i, j in waypoints)
        if not wps:
            raise ValueError("a trajectory needs at least one waypoint")
        return cls(
            waypoints=wps,
            distance=path_distance(wps, granularity),
            inverse_prob=path_inverse_prob(wps, target),
            total_prob=total_probability(wps, target),
        )

    def __len__(self):
        return len(self.waypoints)

    @property
    def start(self) -> GridIndex:
        return self.waypoints[0]

    @property
    def finish(self) -> GridIndex:
        return self.waypoints[-1]


class PlanGraph:
    """Undirected 8-connected graph over cells with expected SNR at or above threshold.

    Vertex ids follow lexicographic ``(i, j)`` order, so ordering by id is
    ordering by grid index.
    """

    def __init__(self, feasible: np.ndarray, target: TargetMap, grid: GridSpec,
                 start: GridIndex, finish: GridIndex):
        feasible = np.asarray(feasible, dtype=bool)
        if feasible.shape != (grid.dimension, grid.dimension) or target.dimension != grid.dimension:
            raise ValueError("map dimensions do not match the grid")
        self.grid = grid
        self.target = target
        self.feasible = feasible
        self.vertices: List[GridIndex] = [tuple(map(int, v)) for v in np.argwhere(feasible)]
        self.index = {v: k for k, v in enumerate(self.vertices)}
        if not self.vertices:
            raise InfeasibleError("no grid meets the expected SNR threshold")
        for name, v in (("start", start), ("finish", finish)):
            if v not in self.index:
                raise InfeasibleError(
                    f"{name} grid ({v[0] + 1}, {v[1] + 1}) does not meet the expected SNR threshold"
                )
        self.start = start
        self.finish = finish
        d = grid.granularity_m
        diag = math.sqrt(2.0) * d
        self.adjacency: List[List[Tuple[int, float]]] = []
        for (i, j) in self.vertices:
            nbrs = []
            for di, dj in _NEIGHBOR_STEPS:
                v = self.index.get((i + di, j + dj))
                if v is not None:
                    nbrs.append((v, diag if di and dj else d))
            self.adjacency.append(nbrs)
        inv = target.inverse_weights
        self.inv_prob = [float(inv[v]) for v in self.vertices]
        self.probs = [float(target.probs[v]) for v in self.vertices]

    def __len__(self):
        return len(self.vertices)

    @property
    def granularity(self) -> float:
        return self.grid.granularity_m

    def n_edges(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def trajectory(self, waypoints: Sequence[GridIndex]) -> Trajectory:
        return Trajectory.from_waypoints(waypoints, self.granularity, self.target)

    def trajectory_from_ids(self, ids: Sequence[int]) -> Trajectory:
        return self.trajectory([self.vertices[k] for k in ids])

    def path_cost(self, ids: Sequence[int], weight: Weight) -> float:
        a_p, a_d = _coefficients(weight)
        d = self.granularity
        cost = a_p * self.inv_prob[ids[0]]
        for u, v in zip(ids, ids[1:]):
            cost += a_p * self.inv_prob[v] + a_d * step_length(self.vertices[u], self.vertices[v], d)
        return cost


def build_graph(snr: SnrMap, target: TargetMap, threshold_db: float, grid: GridSpec,
                start: GridIndex, finish: GridIndex) -> PlanGraph:
    if snr.dimension != grid.dimension:
        raise ValueError("SNR map dimension does not match the grid")
    return PlanGraph(snr.values >= db_to_linear(threshold_db), target, grid, start, finish)


# -- searches on vertex ids --------------------------------------------------

def _search(g: PlanGraph, src: int, weight: Weight, dst: Optional[int] = None,
            banned_nodes=frozenset(), banned_edges=frozenset()):
    """Dijkstra from ``src``; stops early once ``dst`` is settled.

    Returns ``(dist, pred)`` lists. Heap ties resolve on vertex id and the
    first-found predecessor is kept on equal cost.
    """
    a_p, a_d = _coefficients(weight)
    n = len(g.vertices)
    inv = g.inv_prob
    dist = [math.inf] * n
    pred = [-1] * n
    done = [False] * n
    dist[src] = a_p * inv[src]
    heap = [(dist[src], src)]
    adjacency = g.adjacency
    while heap:
        du, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        if u == dst:
            break
        for v, wd in adjacency[u]:
            if done[v] or v in banned_nodes or (u, v) in banned_edges:
                continue
            nd = du + a_p * inv[v] + a_d * wd
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = u
                heapq.heappush(heap, (nd, v))
    return dist, pred


def _unwind(pred: List[int], src: int, dst: int) -> List[int]:
    path = [dst]
    while path[-1] != src:
        path.append(pred[path[-1]])
    path.reverse()
    return path


def shortest_ids(g: PlanGraph, src: int, dst: int, weight: Weight,
                 banned_nodes=frozenset(), banned_edges=frozenset()) -> Optional[Tuple[float, List[int]]]:
    if src in banned_nodes:
        return None
    dist, pred = _search(g, src, weight, dst, banned_nodes, banned_edges)
    if math.isinf(dist[dst]):
        return None
    return dist[dst], _unwind(pred, src, dst)


def shortest_tree(g: PlanGraph, src: int, weight: Weight = "distance"):
    """Full single-source search: ``(dist, pred)`` over all vertex ids."""
    return _search(g, src, weight)


def iter_shortest_simple_paths(g: PlanGraph, src: int, dst: int, weight: Weight) -> Iterator[Tuple[float, List[int]]]:
    """Yen's loopless paths in non-decreasing cost, generated lazily.

    Candidate ties break on the vertex-id sequence of the path.
    """
    first = shortest_ids(g, src, dst, weight)
    if first is None:
        return
    accepted: List[List[int]] = [first[1]]
    seen = {tuple(first[1])}
    yield g.path_cost(first[1], weight), first[1]
    candidates: list = []
    while True:
        prev = accepted[-1]
        for i in range(len(prev) - 1):
            spur = prev[i]
            root = prev[: i + 1]
            banned_edges = set()
            for p in accepted:
                if len(p) > i + 1 and p[: i + 1] == root:
                    banned_edges.add((p[i], p[i + 1]))
            spur_path = shortest_ids(g, spur, dst, weight, frozenset(root[:-1]), banned_edges)
            if spur_path is None:
                continue
            path = root[:-1] + spur_path[1]
            key = tuple(path)
            if key in seen:
                continue
            seen.add(key)
            heapq.heappush(candidates, (g.path_cost(path, weight), key))
        if not candidates:
            return
        cost, key = heapq.heappop(candidates)
        path = list(key)
        accepted.append(path)
        yield cost, path


# -- public API on grid indices ---------------------------------------------

def dijkstra(g: PlanGraph, src: GridIndex, dst: GridIndex, weight: Weight = "distance") -> Optional[Trajectory]:
    """Minimum-weight path, or ``None`` when ``dst`` is unreachable."""
    res = shortest_ids(g, g.index[src], g.index[dst], weight)
    if res is None:
        return None
    return g.trajectory_from_ids(res[1])


def yen_k_shortest(g: PlanGraph, src: GridIndex, dst: GridIndex, weight: Weight, K: int) -> List[Trajectory]:
    if K < 1:
        raise ValueError("K must be at least 1")
    out = []
    for _, ids in iter_shortest_simple_paths(g, g.index[src], g.index[dst], weight):
        out.append(g.trajectory_from_ids(ids))
        if len(out) == K:
            break
    return out


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    shortest_distance: float
    trajectory: Optional[Trajectory]


def check_feasibility(g: PlanGraph, max_distance: float) -> Feasibility:
    """Shortest-distance path from start to finish compared against the budget."""
    t = dijkstra(g, g.start, g.finish, "distance")
    if t is None:
        return Feasibility(False, math.inf, None)
    return Feasibility(t.distance <= max_distance, t.distance, t)
