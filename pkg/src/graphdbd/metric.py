"""l_p distances, density-weighted edge weights and the nearest-neighbour
density estimator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

LN2 = math.log(2.0)


class InvalidInput(ValueError):
    """Raised for malformed points, parameters or goal sets."""


@dataclass(frozen=True)
class MetricParams:
    """l_p norm order ``p`` and density exponent ``q`` (edge weight = dist**q)."""

    p: float = 2.0
    q: float = 8.0

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 1.0):
                raise InvalidInput(f"{name} must be finite and >= 1, got {v!r}")


@dataclass(frozen=True, eq=False)
class PointSet:
    """Immutable ``n x d`` array of finite coordinates."""

    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise InvalidInput(f"expected an n x d array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InvalidInput("point coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.n

    def __getitem__(self, i):
        return self.points[i]


def as_pointset(points) -> PointSet:
    return points if isinstance(points, PointSet) else PointSet(points)


@dataclass(frozen=True)
class DensityEstimate:
    value: float
    nn_distance: float
    ball_volume: float
    degenerate: bool = False


def _check_pair(a, b):
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise InvalidInput(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise InvalidInput("coordinates must be finite")
    return a, b


def _check_p(p):
    if not (math.isfinite(p) and p >= 1.0):
        raise InvalidInput(f"p must be finite and >= 1, got {p!r}")


def lp_distance(a, b, p: float) -> float:
    """(sum |a_i - b_i|**p) ** (1/p)."""
    _check_p(p)
    a, b = _check_pair(a, b)
    diff = np.abs(a - b)
    if p == 1.0:
        return float(diff.sum())
    if p == 2.0:
        return math.hypot(*diff.tolist())  # scaled: no underflow for tiny gaps
    # scale by the max to keep large p from overflowing
    m = float(diff.max()) if diff.size else 0.0
    if m == 0.0:
        return 0.0
    return m * float(np.sum((diff / m) ** p)) ** (1.0 / p)


def edge_weight(a, b, params: MetricParams) -> float:
    dist = lp_distance(a, b, params.p)
    if params.q == 1.0:
        return dist
    return dist**params.q


def pairwise_lp(x: np.ndarray, y: np.ndarray, p: float) -> np.ndarray:
    """Dense ``len(x) x len(y)`` matrix of l_p distances."""
    _check_p(p)
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    diff = np.abs(x[:, None, :] - y[None, :, :])
    if p == 1.0:
        return diff.sum(axis=-1)
    if p == 2.0:
        return np.sqrt((diff * diff).sum(axis=-1))
    return (diff**p).sum(axis=-1) ** (1.0 / p)


def lp_ball_volume(p: float, d: int) -> float:
    """Volume of the unit l_p ball in R^d: 2^d G(1 + 1/p)^d / G(1 + d/p)."""
    _check_p(p)
    if int(d) != d or d < 1:
        raise InvalidInput(f"d must be a positive integer, got {d!r}")
    # log-space keeps large d from overflowing
    logv = d * (math.log(2.0) + math.lgamma((p + 1.0) / p)) - math.lgamma((p + d) / p)
    return math.exp(logv)


def density_from_nn_distance(z: float, n: int, d: int, p: float) -> DensityEstimate:
    c = lp_ball_volume(p, d)
    if z <= 0.0:
        return DensityEstimate(math.inf, 0.0, c, degenerate=True)
    return DensityEstimate(LN2 / (n * c * z**d), float(z), c)


def nn_density_estimate(x0, sample, p: float) -> DensityEstimate:
    """ln(2) / (n c_{p,d} Z^d) with Z the l_p distance from ``x0`` to its
    nearest neighbour in ``sample``.

    ``x0`` must not be a member of ``sample``. A zero nearest-neighbour
    distance yields ``value=inf`` with ``degenerate=True``.
    """
    sample = as_pointset(sample)
    x0 = np.asarray(x0, dtype=np.float64).ravel()
    if x0.shape[0] != sample.d:
        raise InvalidInput(f"dimension mismatch: {x0.shape[0]} vs {sample.d}")
    if not np.all(np.isfinite(x0)):
        raise InvalidInput("coordinates must be finite")
    z = float(pairwise_lp(x0[None, :], sample.points, p).min())
    return density_from_nn_distance(z, sample.n, sample.d, p)
