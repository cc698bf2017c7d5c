from pathlib import Path

import numpy as np
import pytest

from uavsense.graph import PlanGraph
from uavsense.scenario import (
    ChannelParams,
    Gbs,
    GmmComponent,
    GridSpec,
    ScenarioConfig,
    read_scenario_file,
)
from uavsense.targetmap import TargetMap

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"
GOLDEN = Path(__file__).resolve().parent / "golden"

TWO_BLOB_MIXTURE = (
    GmmComponent(mean=(390.0, 150.0), sigma_m=54.0, weight=0.5),
    GmmComponent(mean=(180.0, 450.0), sigma_m=60.0, weight=0.5),
)


def make_config(**overrides) -> ScenarioConfig:
    base = dict(
        grid=GridSpec(150.0, 30.0),
        gbs_list=(Gbs((75.0, 75.0, 10.0), 25.0),),
        mixture=(GmmComponent((75.0, 75.0), 40.0, 1.0),),
        uav_altitude_m=80.0,
        noise_power_dbm=-90.0,
        snr_threshold_db=7.0,
        start=(0, 0),
        finish=(4, 4),
        distance_budget_m=500.0,
        channel_params=ChannelParams(),
    )
    base.update(overrides)
    return ScenarioConfig(**base)


def make_graph(probs, feasible=None, start=(0, 0), finish=None, granularity=30.0) -> PlanGraph:
    probs = np.asarray(probs, dtype=float)
    D = probs.shape[0]
    if feasible is None:
        feasible = np.ones((D, D), dtype=bool)
    if finish is None:
        finish = (D - 1, D - 1)
    return PlanGraph(feasible, TargetMap(probs), GridSpec(D * granularity, granularity), start, finish)


def random_instance(rng: np.random.Generator, D: int, drop_fraction: float = 0.25):
    """Random probabilities and feasibility with connected start/finish corners.

    Returns ``(graph, shortest_distance)``; redraws until start reaches finish.
    """
    from uavsense.graph import check_feasibility

    while True:
        probs = rng.random((D, D)) ** 3
        probs /= probs.sum()
        snr = rng.random((D, D))
        threshold = np.quantile(snr, drop_fraction)
        feasible = snr >= threshold
        feasible[0, 0] = feasible[-1, -1] = True
        g = make_graph(probs, feasible)
        feas = check_feasibility(g, np.inf)
        if np.isfinite(feas.shortest_distance) and feas.shortest_distance > 0:
            return g, feas.shortest_distance


@pytest.fixture(scope="session")
def replication_config():
    return read_scenario_file(SCENARIOS / "replication_30m.yaml")


@pytest.fixture(scope="session")
def replication_instance(replication_config):
    from uavsense.evaluation import build_instance

    return build_instance(replication_config)


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
