"""Gaussian-mixture target distribution and its per-grid probability map."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from .scenario import GmmComponent, GridIndex, GridSpec, ScenarioConfig

_MAX_REJECTION = 0.999


class EmptySupportError(ValueError):
    pass


@dataclass(frozen=True)
class TargetMap:
    """Per-grid target probabilities.

    ``probs`` holds the true probabilities (blocked grids are exactly 0);
    ``inverse_weights`` is the floored reciprocal used as path cost.
    """

    probs: np.ndarray
    floor_epsilon: float = 1e-12
    blocked: np.ndarray | None = None

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError(f"target map must be square, got shape {p.shape}")
        if np.any(p < 0) or np.any(p > 1) or p.sum() > 1 + 1e-9:
            raise ValueError("target map entries must be probabilities summing to at most 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        if self.blocked is None:
            object.__setattr__(self, "blocked", np.zeros(p.shape, dtype=bool))

    @property
    def dimension(self) -> int:
        return self.probs.shape[0]

    @property
    def inverse_weights(self) -> np.ndarray:
        return 1.0 / np.maximum(self.probs, self.floor_epsilon)


def gmm_pdf(point: Sequence[float], mixture: Sequence[GmmComponent]) -> float:
    x, y = point[0], point[1]
    total = 0.0
    for c in mixture:
        s2 = c.sigma_m * c.sigma_m
        r2 = (x - c.mean[0]) ** 2 + (y - c.mean[1]) ** 2
        total += c.weight / (2.0 * math.pi * s2) * math.exp(-r2 / (2.0 * s2))
    return total


def _interval_mass(edges: np.ndarray, mu: float, sigma: float) -> np.ndarray:
    """Normal mass in consecutive ``edges`` intervals.

    Differences are taken on whichever tail is smaller so cells far from
    the mean keep their relative accuracy.
    """
    z = (np.asarray(edges, dtype=float) - mu) / sigma
    a, b = z[:-1], z[1:]
    right_tail = ndtr(-a) - ndtr(-b)
    left_side = ndtr(b) - ndtr(a)
    return np.maximum(np.where(a >= 0, right_tail, left_side), 0.0)


def grid_probability(idx: GridIndex, mixture: Sequence[GmmComponent], grid: GridSpec) -> float:
    """Mixture mass inside cell ``idx`` (0-based), via the separable normal CDF."""
    if not grid.in_bounds(idx):
        raise IndexError(f"grid index {idx} out of bounds")
    d = grid.granularity_m
    ex = np.array([idx[0] * d, (idx[0] + 1) * d])
    ey = np.array([idx[1] * d, (idx[1] + 1) * d])
    total = 0.0
    for c in mixture:
        total += c.weight * _interval_mass(ex, c.mean[0], c.sigma_m)[0] * _interval_mass(ey, c.mean[1], c.sigma_m)[0]
    return float(total)


def raw_probability_map(mixture: Sequence[GmmComponent], grid: GridSpec) -> np.ndarray:
    """Untruncated D x D map; sums to the in-region mass (at most 1)."""
    edges = np.arange(grid.dimension + 1) * grid.granularity_m
    out = np.zeros((grid.dimension, grid.dimension))
    for c in mixture:
        out += c.weight * np.outer(
            _interval_mass(edges, c.mean[0], c.sigma_m),
            _interval_mass(edges, c.mean[1], c.sigma_m),
        )
    return out


def blocked_mask(config: ScenarioConfig) -> np.ndarray:
    """Grids whose square footprint overlaps an obstacle footprint with positive area."""
    D = config.dimension
    d = config.grid.granularity_m
    lo = np.arange(D) * d
    hi = lo + d
    mask = np.zeros((D, D), dtype=bool)
    for ob in config.obstacles:
        x0, y0, x1, y1 = ob.footprint
        ox = (np.minimum(hi, x1) - np.maximum(lo, x0)) > 0
        oy = (np.minimum(hi, y1) - np.maximum(lo, y0)) > 0
        mask |= np.outer(ox, oy)
    return mask


def build_target_map(config: ScenarioConfig, blocked: np.ndarray | None = None) -> TargetMap:
    """Raw map with blocked grids removed and the remainder renormalized to 1."""
    if blocked is None:
        blocked = blocked_mask(config)
    blocked = np.asarray(blocked, dtype=bool)
    raw = raw_probability_map(config.mixture, config.grid)
    kept = np.where(blocked, 0.0, raw)
    total = kept.sum()
    if blocked.all() or not total > 0:
        raise EmptySupportError("no probability mass left after removing blocked grids")
    return TargetMap(kept / total, floor_epsilon=config.floor_epsilon, blocked=blocked)


def sample_targets(
    mixture: Sequence[GmmComponent],
    n: int,
    rng: np.random.Generator | int,
    grid: GridSpec | None = None,
    blocked: np.ndarray | None = None,
) -> np.ndarray:
    """Draw ``n`` target locations, shape ``(n, 2)``.

    With ``grid`` given, draws outside the region (or, with ``blocked``,
    inside a blocked grid) are rejected and redrawn.
    """
    rng = np.random.default_rng(rng)
    weights = np.array([c.weight for c in mixture])
    means = np.array([c.mean for c in mixture], dtype=float)
    sigmas = np.array([c.sigma_m for c in mixture], dtype=float)
    out = np.empty((0, 2))
    drawn = accepted = 0
    while out.shape[0] < n:
        need = n - out.shape[0]
        batch = max(need, 1024) if grid is not None else need
        comp = rng.choice(len(mixture), size=batch, p=weights / weights.sum())
        pts = means[comp] + sigmas[comp, None] * rng.standard_normal((batch, 2))
        if grid is not None:
            keep = np.all((pts >= 0) & (pts < grid.side_length_m), axis=1)
            if blocked is not None:
                cells = np.floor(pts / grid.granularity_m).astype(int).clip(0, grid.dimension - 1)
                keep &= ~blocked[cells[:, 0], cells[:, 1]]
            pts = pts[keep]
        drawn += batch
        accepted += pts.shape[0]
        if drawn >= 100_000 and accepted < (1 - _MAX_REJECTION) * drawn:
            raise ValueError("target sampler rejects more than 99.9% of draws; check mixture vs region")
        out = np.vstack([out, pts[:need]])
    return out


def sample_target(mixture: Sequence[GmmComponent], rng_seed, grid: GridSpec | None = None,
                  blocked: np.ndarray | None = None) -> np.ndarray:
    return sample_targets(mixture, 1, rng_seed, grid, blocked)[0]


def points_to_cells(points: np.ndarray, grid: GridSpec) -> np.ndarray:
    """0-based ``(i, j)`` cell of each point; points on the far edge go to the last cell."""
    cells = np.floor(np.asarray(points) / grid.granularity_m).astype(int)
    return cells.clip(0, grid.dimension - 1)


def export_target_map(target: TargetMap) -> bytes:
    buf = io.StringIO()
    np.savetxt(buf, target.probs, delimiter=",", fmt="%.17g")
    return buf.getvalue().encode("utf-8")


def export_mask(mask: np.ndarray) -> bytes:
    buf = io.StringIO()
    np.savetxt(buf, np.asarray(mask, dtype=int), delimiter=",", fmt="%d")
    return buf.getvalue().encode("utf-8")
