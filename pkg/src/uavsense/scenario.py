"""Problem-instance data model, scenario file I/O and grid geometry.

Grid indices are 0-based inside the package and 1-based in scenario and
trajectory files.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import IO, Any, Optional, Sequence, Tuple, Union

import yaml

GridIndex = Tuple[int, int]

_DIM_RTOL = 1e-9
_WEIGHT_ATOL = 1e-9


class ScenarioError(Exception):
    """Malformed scenario document."""


class ValidationError(ScenarioError):
    """A scenario field violates an invariant.

    ``field_path`` names the offending field, e.g. ``mixture`` or
    ``gbs[1].position``.
    """

    def __init__(self, field_path: str, message: str):
        super().__init__(f"{field_path}: {message}")
        self.field_path = field_path


@dataclass(frozen=True)
class GridSpec:
    side_length_m: float
    granularity_m: float

    def __post_init__(self):
        if not self.side_length_m > 0:
            raise ValidationError("grid.side_length_m", "must be positive")
        if not self.granularity_m > 0:
            raise ValidationError("grid.granularity_m", "must be positive")
        ratio = self.side_length_m / self.granularity_m
        dim = round(ratio)
        if abs(dim * self.granularity_m - self.side_length_m) > _DIM_RTOL * self.side_length_m:
            raise ValidationError(
                "grid.granularity_m",
                f"side length {self.side_length_m} is not an integer multiple of {self.granularity_m}",
            )
        if dim < 2:
            raise ValidationError("grid", "dimension must be at least 2")

    @property
    def dimension(self) -> int:
        return int(round(self.side_length_m / self.granularity_m))

    def in_bounds(self, idx: GridIndex) -> bool:
        d = self.dimension
        return 0 <= idx[0] < d and 0 <= idx[1] < d


@dataclass(frozen=True)
class Gbs:
    position: Tuple[float, float, float]
    transmit_power_dbm: float


@dataclass(frozen=True)
class Obstacle:
    """Axis-aligned box standing on the ground.

    ``footprint`` is ``(x_min, y_min, x_max, y_max)`` in meters.
    """

    footprint: Tuple[float, float, float, float]
    height_m: float


@dataclass(frozen=True)
class GmmComponent:
    mean: Tuple[float, float]
    sigma_m: float
    weight: float


@dataclass(frozen=True)
class ChannelParams:
    """Two-state log-distance path loss: ``PL = intercept + 10 * exponent * log10(d)``."""

    intercept_los_db: float = 38.4
    pathloss_exponent_los: float = 2.1
    intercept_nlos_db: float = 38.4
    pathloss_exponent_nlos: float = 3.0

    def __post_init__(self):
        if self.pathloss_exponent_los < 1:
            raise ValidationError("channel.pathloss_exponent_los", "must be >= 1")
        if self.pathloss_exponent_nlos < 1:
            raise ValidationError("channel.pathloss_exponent_nlos", "must be >= 1")

    def path_loss_db(self, distance_m, los: bool):
        if los:
            return self.intercept_los_db + 10.0 * self.pathloss_exponent_los * math.log10(distance_m)
        return self.intercept_nlos_db + 10.0 * self.pathloss_exponent_nlos * math.log10(distance_m)

    def check_ordering(self, max_distance_m: float) -> None:
        """Require NLoS loss >= LoS loss on ``[1, max_distance_m]``.

        Both losses are affine in ``log10(d)``, so the endpoints suffice.
        """
        for d in (1.0, max(1.0, max_distance_m)):
            if self.path_loss_db(d, los=False) < self.path_loss_db(d, los=True) - 1e-12:
                raise ValidationError(
                    "channel", f"NLoS path loss below LoS path loss at d={d:g} m"
                )


@dataclass(frozen=True)
class ScenarioConfig:
    grid: GridSpec
    gbs_list: Tuple[Gbs, ...]
    mixture: Tuple[GmmComponent, ...]
    uav_altitude_m: float
    noise_power_dbm: float
    snr_threshold_db: float
    start: GridIndex
    finish: GridIndex
    distance_budget_m: float
    obstacles: Tuple[Obstacle, ...] = ()
    channel_params: ChannelParams = field(default_factory=ChannelParams)
    speed_mps: Optional[float] = None
    max_time_s: Optional[float] = None
    rng_seed: int = 0
    floor_epsilon: float = 1e-12

    def __post_init__(self):
        validate_config(self)

    @property
    def dimension(self) -> int:
        return self.grid.dimension


def validate_config(cfg: ScenarioConfig) -> None:
    L = cfg.grid.side_length_m
    if not cfg.gbs_list:
        raise ValidationError("gbs", "at least one GBS is required")
    for k, g in enumerate(cfg.gbs_list):
        x, y, h = g.position
        if not h > 0:
            raise ValidationError(f"gbs[{k}].position", "height must be positive")
        if not (0 <= x <= L and 0 <= y <= L):
            raise ValidationError(f"gbs[{k}].position", "outside the region")
    for k, ob in enumerate(cfg.obstacles):
        x0, y0, x1, y1 = ob.footprint
        if not (0 <= x0 < x1 <= L and 0 <= y0 < y1 <= L):
            raise ValidationError(f"obstacles[{k}].footprint", "must be a non-empty rectangle inside the region")
        if not ob.height_m > 0:
            raise ValidationError(f"obstacles[{k}].height_m", "must be positive")
    if not cfg.mixture:
        raise ValidationError("mixture", "at least one component is required")
    for k, c in enumerate(cfg.mixture):
        if not c.sigma_m > 0:
            raise ValidationError(f"mixture[{k}].sigma_m", "must be positive")
        if not 0 <= c.weight <= 1:
            raise ValidationError(f"mixture[{k}].weight", "must lie in [0, 1]")
    total = math.fsum(c.weight for c in cfg.mixture)
    if abs(total - 1.0) > _WEIGHT_ATOL:
        raise ValidationError("mixture", f"weights sum to {total!r}, expected 1")
    if not cfg.uav_altitude_m > 0:
        raise ValidationError("uav.altitude_m", "must be positive")
    for name, idx in (("uav.start", cfg.start), ("uav.finish", cfg.finish)):
        if not cfg.grid.in_bounds(idx):
            raise ValidationError(name, f"index {_to_file_index(idx)} outside 1..{cfg.dimension}")
    if not cfg.distance_budget_m >= 0:
        raise ValidationError("uav.distance_budget_m", "must be non-negative")
    if cfg.speed_mps is not None or cfg.max_time_s is not None:
        if cfg.speed_mps is None or cfg.max_time_s is None:
            raise ValidationError("uav", "speed_mps and max_time_s must be given together")
        expected = cfg.speed_mps * cfg.max_time_s
        if abs(expected - cfg.distance_budget_m) > 1e-9 * max(1.0, expected):
            raise ValidationError("uav.distance_budget_m", "must equal speed_mps * max_time_s")
    if not cfg.floor_epsilon > 0:
        raise ValidationError("solver.floor_epsilon", "must be positive")
    max_d = math.hypot(math.hypot(L, L), max([g.position[2] for g in cfg.gbs_list] + [cfg.uav_altitude_m]))
    cfg.channel_params.check_ordering(max_d)


# -- geometry ---------------------------------------------------------------

def grid_center(idx: GridIndex, grid: GridSpec) -> Tuple[float, float]:
    """Horizontal center of a (0-based) grid cell in meters."""
    if not grid.in_bounds(idx):
        raise IndexError(f"grid index {idx} out of bounds for dimension {grid.dimension}")
    d = grid.granularity_m
    return ((idx[0] + 0.5) * d, (idx[1] + 0.5) * d)


def grid_centers(grid: GridSpec):
    """Return ``(X, Y)`` arrays of shape ``(D, D)``; ``X[i, j]`` is the x of cell ``(i, j)``."""
    import numpy as np

    c = (np.arange(grid.dimension) + 0.5) * grid.granularity_m
    return np.meshgrid(c, c, indexing="ij")


def snap_to_grid(point: Sequence[float], grid: GridSpec) -> GridIndex:
    """Nearest grid cell to a horizontal point; ties go to the lower index."""
    out = []
    for coord in point[:2]:
        # centers sit at (k + 0.5) * d; ceil(t - 0.5) rounds half down
        k = math.ceil(coord / grid.granularity_m - 1.0)
        out.append(max(0, min(grid.dimension - 1, k)))
    return (out[0], out[1])


# -- file I/O ---------------------------------------------------------------

def _to_file_index(idx: GridIndex):
    return [int(idx[0]) + 1, int(idx[1]) + 1]


def _from_file_index(value, path: str) -> GridIndex:
    if not (isinstance(value, (list, tuple)) and len(value) == 2 and all(isinstance(v, int) for v in value)):
        raise ValidationError(path, "expected a pair of integer grid indices")
    return (value[0] - 1, value[1] - 1)


def _req(section: dict, key: str, path: str):
    if not isinstance(section, dict) or key not in section:
        raise ValidationError(f"{path}.{key}" if path else key, "missing")
    return section[key]


def _num(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(path, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ValidationError(path, "must be finite")
    return float(value)


def _vec(value, n: int, path: str) -> tuple:
    if not (isinstance(value, (list, tuple)) and len(value) == n):
        raise ValidationError(path, f"expected a list of {n} numbers")
    return tuple(_num(v, f"{path}[{k}]") for k, v in enumerate(value))


def config_from_dict(doc: Any) -> ScenarioConfig:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a mapping")
    grid_s = _req(doc, "grid", "")
    grid = GridSpec(
        side_length_m=_num(_req(grid_s, "side_length_m", "grid"), "grid.side_length_m"),
        granularity_m=_num(_req(grid_s, "granularity_m", "grid"), "grid.granularity_m"),
    )
    if "dimension" in grid_s and grid_s["dimension"] != grid.dimension:
        raise ValidationError("grid.dimension", f"expected {grid.dimension}, file says {grid_s['dimension']}")

    gbs_s = _req(doc, "gbs", "")
    if not isinstance(gbs_s, list):
        raise ValidationError("gbs", "expected a list")
    gbs = tuple(
        Gbs(
            position=_vec(_req(g, "position", f"gbs[{k}]"), 3, f"gbs[{k}].position"),
            transmit_power_dbm=_num(_req(g, "transmit_power_dbm", f"gbs[{k}]"), f"gbs[{k}].transmit_power_dbm"),
        )
        for k, g in enumerate(gbs_s)
    )
    obs_s = doc.get("obstacles") or []
    if not isinstance(obs_s, list):
        raise ValidationError("obstacles", "expected a list")
    obstacles = tuple(
        Obstacle(
            footprint=_vec(_req(o, "footprint", f"obstacles[{k}]"), 4, f"obstacles[{k}].footprint"),
            height_m=_num(_req(o, "height_m", f"obstacles[{k}]"), f"obstacles[{k}].height_m"),
        )
        for k, o in enumerate(obs_s)
    )
    mix_s = _req(doc, "mixture", "")
    if not isinstance(mix_s, list):
        raise ValidationError("mixture", "expected a list")
    mixture = tuple(
        GmmComponent(
            mean=_vec(_req(c, "mean", f"mixture[{k}]"), 2, f"mixture[{k}].mean"),
            sigma_m=_num(_req(c, "sigma_m", f"mixture[{k}]"), f"mixture[{k}].sigma_m"),
            weight=_num(_req(c, "weight", f"mixture[{k}]"), f"mixture[{k}].weight"),
        )
        for k, c in enumerate(mix_s)
    )
    uav = _req(doc, "uav", "")
    speed = uav.get("speed_mps")
    tmax = uav.get("max_time_s")
    if "distance_budget_m" in uav:
        budget = _num(uav["distance_budget_m"], "uav.distance_budget_m")
        speed = None if speed is None else _num(speed, "uav.speed_mps")
        tmax = None if tmax is None else _num(tmax, "uav.max_time_s")
    elif speed is not None and tmax is not None:
        speed = _num(speed, "uav.speed_mps")
        tmax = _num(tmax, "uav.max_time_s")
        budget = speed * tmax
    else:
        raise ValidationError("uav.distance_budget_m", "missing (give it, or speed_mps and max_time_s)")

    ch = doc.get("channel") or {}
    defaults = ChannelParams()
    channel = ChannelParams(**{
        k: _num(ch.get(k, getattr(defaults, k)), f"channel.{k}")
        for k in ("intercept_los_db", "pathloss_exponent_los", "intercept_nlos_db", "pathloss_exponent_nlos")
    })
    solver = doc.get("solver") or {}
    seed = solver.get("rng_seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ValidationError("solver.rng_seed", "expected an integer")

    return ScenarioConfig(
        grid=grid,
        gbs_list=gbs,
        obstacles=obstacles,
        mixture=mixture,
        uav_altitude_m=_num(_req(uav, "altitude_m", "uav"), "uav.altitude_m"),
        noise_power_dbm=_num(_req(uav, "noise_power_dbm", "uav"), "uav.noise_power_dbm"),
        snr_threshold_db=_num(_req(uav, "snr_threshold_db", "uav"), "uav.snr_threshold_db"),
        start=_from_file_index(_req(uav, "start", "uav"), "uav.start"),
        finish=_from_file_index(_req(uav, "finish", "uav"), "uav.finish"),
        distance_budget_m=budget,
        speed_mps=speed,
        max_time_s=tmax,
        channel_params=channel,
        rng_seed=seed,
        floor_epsilon=_num(solver.get("floor_epsilon", 1e-12), "solver.floor_epsilon"),
    )


def config_to_dict(cfg: ScenarioConfig) -> dict:
    doc: dict = {
        "grid": {
            "side_length_m": cfg.grid.side_length_m,
            "granularity_m": cfg.grid.granularity_m,
            "dimension": cfg.dimension,
        },
        "gbs": [
            {"position": list(g.position), "transmit_power_dbm": g.transmit_power_dbm}
            for g in cfg.gbs_list
        ],
    }
    if cfg.obstacles:
        doc["obstacles"] = [
            {"footprint": list(o.footprint), "height_m": o.height_m} for o in cfg.obstacles
        ]
    doc["mixture"] = [
        {"mean": list(c.mean), "sigma_m": c.sigma_m, "weight": c.weight} for c in cfg.mixture
    ]
    uav = {
        "altitude_m": cfg.uav_altitude_m,
        "noise_power_dbm": cfg.noise_power_dbm,
        "snr_threshold_db": cfg.snr_threshold_db,
        "start": _to_file_index(cfg.start),
        "finish": _to_file_index(cfg.finish),
    }
    if cfg.speed_mps is not None:
        uav["speed_mps"] = cfg.speed_mps
        uav["max_time_s"] = cfg.max_time_s
    else:
        uav["distance_budget_m"] = cfg.distance_budget_m
    doc["uav"] = uav
    ch = cfg.channel_params
    doc["channel"] = {
        "intercept_los_db": ch.intercept_los_db,
        "pathloss_exponent_los": ch.pathloss_exponent_los,
        "intercept_nlos_db": ch.intercept_nlos_db,
        "pathloss_exponent_nlos": ch.pathloss_exponent_nlos,
    }
    doc["solver"] = {"rng_seed": cfg.rng_seed, "floor_epsilon": cfg.floor_epsilon}
    return doc


Source = Union[str, bytes, IO]


def load_scenario(source: Source) -> ScenarioConfig:
    """Parse and validate a scenario document (YAML text, bytes or a file object)."""
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        doc = yaml.safe_load(source)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"cannot parse scenario: {exc}") from exc
    return config_from_dict(doc)


def save_scenario(cfg: ScenarioConfig) -> bytes:
    buf = io.StringIO()
    yaml.safe_dump(config_to_dict(cfg), buf, sort_keys=False, default_flow_style=None)
    return buf.getvalue().encode("utf-8")


def read_scenario_file(path) -> ScenarioConfig:
    with open(path, "rb") as fh:
        return load_scenario(fh)
