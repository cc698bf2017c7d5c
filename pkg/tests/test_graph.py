import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uavsense.graph import (
    InfeasibleError,
    PlanGraph,
    build_graph,
    check_feasibility,
    dijkstra,
    path_distance,
    path_inverse_prob,
    total_probability,
    yen_k_shortest,
)
from uavsense.radio import SnrMap
from uavsense.scenario import GridSpec
from uavsense.targetmap import TargetMap

from conftest import make_graph, random_instance


def _uniform(D):
    return np.full((D, D), 1.0 / (D * D))


def _to_networkx(g: PlanGraph) -> nx.Graph:
    G = nx.Graph()
    G.add_nodes_from(range(len(g)))
    for u, nbrs in enumerate(g.adjacency):
        for v, w in nbrs:
            G.add_edge(u, v, weight=w)
    return G


def _all_paths(g):
    G = _to_networkx(g)
    return list(nx.all_simple_paths(G, g.index[g.start], g.index[g.finish]))


def test_full_grid_vertices_and_degrees():
    D = 4
    snr = SnrMap(np.full((D, D), 100.0))
    g = build_graph(snr, TargetMap(_uniform(D)), 10.0, GridSpec(120, 30), (0, 0), (3, 3))
    assert len(g) == 16
    degrees = [len(a) for a in g.adjacency]
    assert degrees[g.index[(1, 1)]] == 8
    assert degrees[g.index[(0, 0)]] == 3
    assert degrees[g.index[(0, 1)]] == 5
    assert g.n_edges() == 42  # 2*4*3 straight + 2*3*3 diagonal


def test_threshold_above_everything():
    snr = SnrMap(np.full((3, 3), 10.0))
    with pytest.raises(InfeasibleError):
        build_graph(snr, TargetMap(_uniform(3)), 30.0, GridSpec(90, 30), (0, 0), (2, 2))


def test_infeasible_finish_named_one_based():
    vals = np.full((3, 3), 100.0)
    vals[2, 1] = 1.0
    with pytest.raises(InfeasibleError, match=r"finish grid \(3, 2\)"):
        build_graph(SnrMap(vals), TargetMap(_uniform(3)), 10.0, GridSpec(90, 30), (0, 0), (2, 1))


def test_threshold_is_inclusive():
    vals = np.full((2, 2), 10.0)
    g = build_graph(SnrMap(vals), TargetMap(_uniform(2)), 10.0, GridSpec(60, 30), (0, 0), (1, 1))
    assert len(g) == 4


def test_hollow_3x3():
    feasible = np.ones((3, 3), dtype=bool)
    feasible[1, 1] = False
    g = make_graph(_uniform(3), feasible)
    assert len(g) == 8
    # by hand: corners keep 2 neighbours, edge midpoints keep 4
    deg = {v: len(g.adjacency[g.index[v]]) for v in g.vertices}
    assert deg[(0, 0)] == 2 and deg[(0, 1)] == 4 and deg[(2, 2)] == 2
    t = dijkstra(g, (0, 0), (2, 2))
    assert (1, 1) not in t.waypoints
    assert t.distance == pytest.approx(30 * (2 + math.sqrt(2)))


def test_edge_weights_are_straight_or_diagonal():
    g, _ = random_instance(np.random.default_rng(0), 6)
    for u, nbrs in enumerate(g.adjacency):
        for v, w in nbrs:
            assert w in (30.0, 30.0 * math.sqrt(2))
            assert (u, w) in g.adjacency[v]


def test_path_distance_examples():
    assert path_distance([(2, 2)], 30) == 0
    assert path_distance([(0, k) for k in range(5)], 30) == pytest.approx(120)
    assert path_distance([(0, 0), (1, 1), (1, 2)], 30) == pytest.approx(30 * (1 + math.sqrt(2)))


def test_path_inverse_prob_examples():
    probs = np.zeros((2, 2))
    probs[0, 0], probs[0, 1], probs[1, 1], probs[1, 0] = 0.2, 0.5, 0.25, 0.05
    t = TargetMap(probs)
    assert path_inverse_prob([(0, 0)], t) == pytest.approx(5)
    assert path_inverse_prob([(0, 1), (1, 1)], t) == pytest.approx(6)


def test_total_probability_counts_distinct_cells():
    probs = np.full((4, 4), 1 / 16)
    t = TargetMap(probs)
    once = total_probability([(2, 2), (3, 3)], t)
    twice = total_probability([(2, 2), (3, 3), (2, 2), (3, 3)], t)
    assert once == twice == pytest.approx(2 / 16)


def test_trajectory_caches_agree():
    g, _ = random_instance(np.random.default_rng(1), 5)
    t = dijkstra(g, g.start, g.finish, "inverse_prob")
    assert t.distance == path_distance(t.waypoints, 30.0)
    assert t.inverse_prob == path_inverse_prob(t.waypoints, g.target)


def test_dijkstra_straight_corridor():
    feasible = np.zeros((5, 5), dtype=bool)
    feasible[:, 2] = True
    g = make_graph(_uniform(5), feasible, start=(0, 2), finish=(4, 2))
    t = dijkstra(g, (0, 2), (4, 2))
    assert t.waypoints == tuple((i, 2) for i in range(5))
    assert t.distance == pytest.approx(120)


def test_dijkstra_full_diagonal():
    g = make_graph(_uniform(5))
    t = dijkstra(g, (0, 0), (4, 4))
    assert t.waypoints == tuple((k, k) for k in range(5))
    assert t.distance == pytest.approx(4 * math.sqrt(2) * 30)


def test_dijkstra_disconnected_returns_none():
    feasible = np.ones((4, 4), dtype=bool)
    feasible[:, 2] = False
    g = make_graph(_uniform(4), feasible)
    assert dijkstra(g, (0, 0), (3, 3)) is None
    assert not check_feasibility(g, 1e9).feasible


def test_dijkstra_around_wall_matches_enumeration():
    feasible = np.ones((4, 4), dtype=bool)
    feasible[0:3, 2] = False
    rng = np.random.default_rng(3)
    probs = rng.random((4, 4))
    g = make_graph(probs / probs.sum(), feasible)
    paths = _all_paths(g)
    for weight in ("distance", "inverse_prob"):
        best = min(g.path_cost(p, weight) for p in paths)
        t = dijkstra(g, g.start, g.finish, weight)
        ids = [g.index[w] for w in t.waypoints]
        assert g.path_cost(ids, weight) == pytest.approx(best, rel=1e-12)


@pytest.mark.parametrize("seed", range(15))
def test_dijkstra_random_small_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    g, _ = random_instance(rng, 4)
    paths = _all_paths(g)
    for weight in ("distance", "inverse_prob", 0.37):
        best = min(g.path_cost(p, weight) for p in paths)
        t = dijkstra(g, g.start, g.finish, weight)
        assert g.path_cost([g.index[w] for w in t.waypoints], weight) == pytest.approx(best, rel=1e-12)


def test_yen_2x2():
    g = make_graph(_uniform(2))
    paths = yen_k_shortest(g, (0, 0), (1, 1), "distance", 10)
    d = [p.distance for p in paths]
    assert len(paths) == 5
    assert d[0] == pytest.approx(30 * math.sqrt(2))
    assert d[1] == pytest.approx(60) and d[2] == pytest.approx(60)
    # lexicographic tie-break: via (0, 1) before via (1, 0)
    assert paths[1].waypoints == ((0, 0), (0, 1), (1, 1))
    assert paths[2].waypoints == ((0, 0), (1, 0), (1, 1))


def test_yen_k1_is_dijkstra():
    g, _ = random_instance(np.random.default_rng(5), 5)
    assert yen_k_shortest(g, g.start, g.finish, 0.8, 1)[0] == dijkstra(g, g.start, g.finish, 0.8)


def test_yen_rejects_k0():
    with pytest.raises(ValueError):
        yen_k_shortest(make_graph(_uniform(2)), (0, 0), (1, 1), "distance", 0)


@pytest.mark.parametrize("seed", range(8))
def test_yen_matches_networkx_costs(seed):
    rng = np.random.default_rng(100 + seed)
    g, _ = random_instance(rng, 4)
    lam = float(rng.uniform(0, 2))
    K = 25
    ours = yen_k_shortest(g, g.start, g.finish, lam, K)
    costs = [g.path_cost([g.index[w] for w in t.waypoints], lam) for t in ours]
    every = sorted(g.path_cost(p, lam) for p in _all_paths(g))
    assert len(ours) == min(K, len(every))
    np.testing.assert_allclose(costs, every[: len(ours)], rtol=1e-9)
    assert len({t.waypoints for t in ours}) == len(ours)
    assert all(len(set(t.waypoints)) == len(t.waypoints) for t in ours)


def test_yen_prefix_property_and_stability():
    g, _ = random_instance(np.random.default_rng(9), 5)
    long = yen_k_shortest(g, g.start, g.finish, "distance", 12)
    short = yen_k_shortest(g, g.start, g.finish, "distance", 11)
    assert short == long[:11]
    assert yen_k_shortest(g, g.start, g.finish, "distance", 12) == long


def test_yen_fewer_paths_than_k():
    g = make_graph(_uniform(2))
    assert len(yen_k_shortest(g, (0, 0), (1, 1), "inverse_prob", 100)) == 5


def test_feasibility_boundaries():
    g = make_graph(_uniform(5))
    d = 4 * math.sqrt(2) * 30
    assert check_feasibility(g, d).feasible
    res = check_feasibility(g, d - 15)
    assert not res.feasible and res.shortest_distance == pytest.approx(d)


def test_start_equals_finish():
    g = make_graph(_uniform(3), start=(1, 1), finish=(1, 1))
    res = check_feasibility(g, 0.0)
    assert res.feasible and res.shortest_distance == 0
    assert res.trajectory.waypoints == ((1, 1),)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 7), st.integers(1, 30))
def test_geometric_arithmetic_bound(seed, D, steps):
    rng = np.random.default_rng(seed)
    probs = rng.random((D, D)) ** 4
    probs[rng.random((D, D)) < 0.2] = 0.0
    probs[0, 0] += 1e-3
    t = TargetMap(probs / probs.sum())
    cur = (int(rng.integers(D)), int(rng.integers(D)))
    walk = [cur]
    for _ in range(steps):
        di, dj = rng.integers(-1, 2, size=2)
        nxt = (min(max(cur[0] + di, 0), D - 1), min(max(cur[1] + dj, 0), D - 1))
        if nxt != cur:
            walk.append(nxt)
            cur = nxt
    total = total_probability(walk, t)
    bound = 1.0 / path_inverse_prob(walk, t)
    if max(t.probs[c] for c in walk) >= t.floor_epsilon:
        assert total >= bound
    else:
        # only zero-mass cells: the floor keeps f^P finite, bound is below epsilon
        assert total == 0.0 and bound <= t.floor_epsilon
