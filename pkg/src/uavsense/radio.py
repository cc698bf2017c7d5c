"""Obstacle-aware large-scale channel model and the expected-SNR map."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .scenario import ChannelParams, Gbs, GridSpec, Obstacle, ScenarioConfig, grid_center

__all__ = [
    "ChannelParams",
    "SnrMap",
    "line_of_sight",
    "large_scale_gain",
    "build_snr_map",
    "import_snr_map",
    "export_snr_map",
    "db_to_linear",
    "linear_to_db",
]


def db_to_linear(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class SnrMap:
    """Expected SNR (linear) at every grid center, indexed ``values[i, j]``."""

    values: np.ndarray
    association: np.ndarray | None = None  # argmax GBS per grid, when built from a config

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"SNR map must be square, got shape {v.shape}")
        if not np.all(np.isfinite(v)) or not np.all(v > 0):
            raise ValueError("SNR map entries must be finite and positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dimension(self) -> int:
        return self.values.shape[0]

    def feasible(self, threshold_db: float) -> np.ndarray:
        """Boolean mask of grids whose expected SNR meets ``threshold_db``."""
        return self.values >= db_to_linear(threshold_db)


def line_of_sight(a: Sequence[float], b: Sequence[float], obstacles: Sequence[Obstacle]) -> bool:
    """True iff segment ``a``-``b`` misses every obstacle box.

    Slab test against each box ``[x0, x1] x [y0, y1] x [0, h]``; grazing a
    face or edge counts as blocked.
    """
    a = np.asarray(a, dtype=float)
    d = np.asarray(b, dtype=float) - a
    for ob in obstacles:
        x0, y0, x1, y1 = ob.footprint
        lo = (x0, y0, 0.0)
        hi = (x1, y1, ob.height_m)
        t_enter, t_exit = 0.0, 1.0
        hit = True
        for k in range(3):
            if d[k] == 0.0:
                if a[k] < lo[k] or a[k] > hi[k]:
                    hit = False
                    break
                continue
            t0 = (lo[k] - a[k]) / d[k]
            t1 = (hi[k] - a[k]) / d[k]
            if t0 > t1:
                t0, t1 = t1, t0
            t_enter = max(t_enter, t0)
            t_exit = min(t_exit, t1)
            if t_enter > t_exit:
                hit = False
                break
        if hit:
            return False
    return True


def large_scale_gain(
    gbs: Gbs,
    grid_point: Sequence[float],
    altitude_m: float,
    obstacles: Sequence[Obstacle],
    params: ChannelParams,
) -> float:
    """Linear amplitude gain between a GBS and the UAV above ``grid_point``.

    The squared gain in dB is the negated path loss, with LoS or NLoS
    parameters chosen by :func:`line_of_sight`.
    """
    uav = (grid_point[0], grid_point[1], altitude_m)
    dist = math.dist(gbs.position, uav)
    if dist < 1.0:
        raise ValueError(f"GBS-UAV distance {dist:.3g} m is below the 1 m model floor")
    los = line_of_sight(gbs.position, uav, obstacles)
    gain_sq_db = -params.path_loss_db(dist, los)
    return 10.0 ** (gain_sq_db / 20.0)


def build_snr_map(config: ScenarioConfig) -> SnrMap:
    grid = config.grid
    D = grid.dimension
    noise_mw = 10.0 ** (config.noise_power_dbm / 10.0)
    per_gbs = np.empty((len(config.gbs_list), D, D))
    for m, gbs in enumerate(config.gbs_list):
        p_mw = 10.0 ** (gbs.transmit_power_dbm / 10.0)
        for i in range(D):
            for j in range(D):
                g = large_scale_gain(
                    gbs, grid_center((i, j), grid), config.uav_altitude_m,
                    config.obstacles, config.channel_params,
                )
                per_gbs[m, i, j] = p_mw * g * g / noise_mw
    return SnrMap(per_gbs.max(axis=0), association=per_gbs.argmax(axis=0))


def import_snr_map(source, grid: GridSpec | None = None) -> SnrMap:
    """Read a D x D CSV of expected SNR in dB (row = x index, column = y index).

    A non-numeric first row is treated as a header and skipped.
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    lines = [ln for ln in source.splitlines() if ln.strip()]
    if lines:
        try:
            [float(x) for x in lines[0].split(",")]
        except ValueError:
            lines = lines[1:]
    rows = [[float(x) for x in ln.split(",")] for ln in lines]
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise ValueError("SNR map CSV rows have unequal lengths")
    db = np.array(rows, dtype=float)
    expected = grid.dimension if grid is not None else db.shape[0]
    if db.shape != (expected, expected):
        raise ValueError(f"SNR map CSV has shape {db.shape}, expected ({expected}, {expected})")
    if not np.all(np.isfinite(db)):
        raise ValueError("SNR map CSV contains non-finite entries")
    return SnrMap(db_to_linear(db))


def export_snr_map(snr: SnrMap) -> bytes:
    buf = io.StringIO()
    np.savetxt(buf, linear_to_db(snr.values), delimiter=",", fmt="%.10g")
    return buf.getvalue().encode("utf-8")
