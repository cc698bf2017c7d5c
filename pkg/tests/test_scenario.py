import math

import pytest
import yaml
from hypothesis import given, strategies as st

from uavsense.scenario import (
    GridSpec,
    ScenarioError,
    ValidationError,
    config_to_dict,
    grid_center,
    load_scenario,
    save_scenario,
    snap_to_grid,
)

from conftest import GOLDEN, make_config


def test_grid_center_first_cell():
    assert grid_center((0, 0), GridSpec(600, 30)) == (15.0, 15.0)


def test_grid_center_interior_cell():
    # file index (13, 5)
    assert grid_center((12, 4), GridSpec(600, 30)) == (375.0, 135.0)


def test_grid_center_last_cell():
    g = GridSpec(600, 30)
    assert grid_center((19, 19), g) == (585.0, 585.0)


def test_grid_center_out_of_bounds():
    with pytest.raises(IndexError):
        grid_center((20, 0), GridSpec(600, 30))
    with pytest.raises(IndexError):
        grid_center((-1, 0), GridSpec(600, 30))


def test_grid_rejects_non_integer_dimension():
    with pytest.raises(ValidationError) as exc:
        GridSpec(600, 35)
    assert "granularity" in exc.value.field_path


def test_grid_dimension_tolerates_rounding():
    assert GridSpec(0.3, 0.1).dimension == 3


@given(st.integers(2, 25), st.floats(1.0, 100.0))
def test_grid_centers_injective_and_inside(D, delta):
    g = GridSpec(D * delta, delta)
    centers = {grid_center((i, j), g) for i in range(D) for j in range(D)}
    assert len(centers) == D * D
    assert all(0 < x < g.side_length_m and 0 < y < g.side_length_m for x, y in centers)


@given(st.integers(3, 20), st.floats(1.0, 100.0), st.integers(1, 18), st.integers(1, 18))
def test_neighbor_center_distance(D, delta, i, j):
    g = GridSpec(D * delta, delta)
    i, j = min(i, D - 2), min(j, D - 2)
    c = grid_center((i, j), g)
    straight = math.dist(c, grid_center((i + 1, j), g))
    diag = math.dist(c, grid_center((i + 1, j + 1), g))
    assert straight == pytest.approx(delta, rel=1e-12)
    assert diag == pytest.approx(math.sqrt(2) * delta, rel=1e-12)


def test_snap_to_grid_ties_go_low():
    g = GridSpec(600, 30)
    assert snap_to_grid((30.0, 31.0), g) == (0, 1)
    assert snap_to_grid((15.0, 599.9), g) == (0, 19)
    assert snap_to_grid((-5.0, 44.0), g) == (0, 1)


def test_load_replication_file(replication_config):
    cfg = replication_config
    assert cfg.grid.side_length_m == 600
    assert len(cfg.gbs_list) == 3
    assert cfg.uav_altitude_m == 80
    assert cfg.noise_power_dbm == -90
    assert cfg.snr_threshold_db == 7
    assert cfg.start == (0, 0) and cfg.finish == (19, 19)
    assert all(g.transmit_power_dbm == 25 and g.position[2] == 10 for g in cfg.gbs_list)


def _doc():
    return config_to_dict(make_config())


def test_weights_not_summing_to_one():
    doc = _doc()
    doc["mixture"] = [{"mean": [75, 75], "sigma_m": 40, "weight": 0.9}]
    with pytest.raises(ValidationError) as exc:
        load_scenario(yaml.safe_dump(doc))
    assert exc.value.field_path == "mixture"


def test_speed_time_form():
    doc = _doc()
    del doc["uav"]["distance_budget_m"]
    doc["uav"]["speed_mps"] = 15
    doc["uav"]["max_time_s"] = 180
    cfg = load_scenario(yaml.safe_dump(doc))
    assert cfg.distance_budget_m == 2700
    assert load_scenario(save_scenario(cfg)) == cfg


def test_no_gbs_is_a_validation_error():
    doc = _doc()
    doc["gbs"] = []
    with pytest.raises(ValidationError) as exc:
        load_scenario(yaml.safe_dump(doc))
    assert exc.value.field_path == "gbs"


def test_malformed_document():
    with pytest.raises(ScenarioError):
        load_scenario("grid: [unclosed")
    with pytest.raises(ScenarioError):
        load_scenario("- just a list")


@pytest.mark.parametrize("path, value", [
    (("uav", "start"), [0, 1]),
    (("uav", "finish"), [6, 1]),
    (("gbs", 0, "position"), [75, 75, -1]),
    (("obstacles",), [{"footprint": [10, 10, 5, 20], "height_m": 3}]),
    (("mixture", 0, "sigma_m"), 0),
])
def test_invariant_violations(path, value):
    doc = _doc()
    node = doc
    for key in path[:-1]:
        node = node[key]
    node[path[-1]] = value
    with pytest.raises(ValidationError):
        load_scenario(yaml.safe_dump(doc))


def test_indices_are_one_based_in_files():
    text = save_scenario(make_config(start=(0, 2), finish=(4, 3))).decode()
    doc = yaml.safe_load(text)
    assert doc["uav"]["start"] == [1, 3]
    assert doc["uav"]["finish"] == [5, 4]


def test_round_trip_and_optional_obstacles():
    cfg = make_config()
    data = save_scenario(cfg)
    assert b"obstacles" not in data
    assert load_scenario(data) == cfg


def test_round_trip_replication(replication_config):
    assert load_scenario(save_scenario(replication_config)) == replication_config


def test_replication_golden_bytes(replication_config):
    assert save_scenario(replication_config) == (GOLDEN / "replication_30m.saved.yaml").read_bytes()


def test_nlos_below_los_rejected():
    from uavsense.scenario import ChannelParams

    with pytest.raises(ValidationError):
        make_config(channel_params=ChannelParams(intercept_nlos_db=20.0))
