"""The 18 topological features: amplitudes, persistence entropies and point counts.

Feature ids (metric-major, then homology dimension)::

    0/1   bottleneck amplitude        H0/H1
    2/3   wasserstein amplitude       H0/H1
    4/5   betti amplitude             H0/H1
    6/7   landscape amplitude         H0/H1
    8/9   silhouette amplitude        H0/H1
    10/11 heat amplitude              H0/H1
    12/13 normalized entropy          H0/H1
    14/15 unnormalized entropy        H0/H1
    16/17 number of points            H0/H1

Grid-based amplitudes sample a uniform grid over ``[0, cap]`` where ``cap`` is
the diagram's own filtration ceiling.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import UnknownMetric

METRICS = ("bottleneck", "wasserstein", "betti", "landscape", "silhouette", "heat")
N_TDA_FEATURES = 18

TDA_FEATURE_NAMES = tuple(
    [f"{m}_amplitude_h{k}" for m in METRICS for k in (0, 1)]
    + [f"normalized_entropy_h{k}" for k in (0, 1)]
    + [f"entropy_h{k}" for k in (0, 1)]
    + [f"n_points_h{k}" for k in (0, 1)]
)


@dataclass(frozen=True)
class AmplitudeParams:
    metric: str = "wasserstein"
    p: float = 2.0
    grid_size: int = 100
    layers: int = 2
    sigma: float = None  # heat kernel width; None means cap / 10
    w: float = 1.0

    def __post_init__(self):
        if self.metric not in METRICS:
            raise UnknownMetric(f"unknown amplitude metric {self.metric!r}")
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.grid_size < 2:
            raise ValueError("grid_size must be >= 2")
        if self.sigma is not None and not self.sigma > 0:
            raise ValueError("sigma must be > 0")

    def replace(self, **kw):
        fields = dict(self.__dict__)
        fields.update(kw)
        return AmplitudeParams(**fields)


@dataclass
class TdaFeatureVector:
    values: np.ndarray
    ids: np.ndarray


def _pairs(diag, k):
    return np.asarray(diag[k], dtype=np.float64).reshape(-1, 2)


def num_points(diag, k):
    return int(_pairs(diag, k).shape[0])


def persistence_entropy(diag, k, normalized=False):
    """Shannon entropy (nats) of lifetimes normalised by their total.

    The normalized variant divides by ln(m), m = number of pairs, so it lies
    in [0, 1]. Empty or single-pair diagrams give 0.
    """
    pairs = _pairs(diag, k)
    life = pairs[:, 1] - pairs[:, 0]
    life = life[life > 0]
    total = life.sum()
    if life.size == 0 or total <= 0:
        return 0.0
    q = life / total
    h = float(-(q * np.log(q)).sum())
    h = max(h, 0.0)
    if normalized:
        m = pairs.shape[0]
        return h / math.log(m) if m > 1 else 0.0
    return h


def _grid(cap, size):
    return np.linspace(0.0, cap, size)


def betti_curve(diag, k, grid_size=100, cap=None):
    """Number of pairs with ``birth <= t < death`` at each grid point of ``[0, cap]``."""
    pairs = _pairs(diag, k)
    t = _grid(diag.cap if cap is None else cap, grid_size)
    alive = (pairs[:, :1] <= t) & (t < pairs[:, 1:])
    return alive.sum(axis=0).astype(float)


def _tents(pairs, t):
    # max(0, min(t - b, d - t)) for each pair, shape (m, len(t))
    return np.maximum(0.0, np.minimum(t - pairs[:, :1], pairs[:, 1:] - t))


def landscape(diag, k, layers=2, grid_size=100):
    pairs = _pairs(diag, k)
    t = _grid(diag.cap, grid_size)
    out = np.zeros((layers, grid_size))
    if pairs.size:
        tents = -np.sort(-_tents(pairs, t), axis=0)
        n = min(layers, tents.shape[0])
        out[:n] = tents[:n]
    return out


def silhouette(diag, k, w=1.0, grid_size=100):
    """Sum of tent functions weighted by lifetime**w (not divided by the total weight)."""
    pairs = _pairs(diag, k)
    t = _grid(diag.cap, grid_size)
    if not pairs.size:
        return np.zeros(grid_size)
    weights = (pairs[:, 1] - pairs[:, 0]) ** w
    return weights @ _tents(pairs, t)


def heat_raster(diag, k, sigma, grid_size=100):
    """Gaussian-smoothed diagram minus its reflection across the diagonal, on a grid_size**2 raster."""
    pairs = _pairs(diag, k)
    t = _grid(diag.cap, grid_size)
    if not pairs.size:
        return np.zeros((grid_size, grid_size))
    norm = 1.0 / (2.0 * math.pi * sigma**2)

    def bumps(cx, cy):
        gx = np.exp(-((t[None, :] - cx[:, None]) ** 2) / (2 * sigma**2))
        gy = np.exp(-((t[None, :] - cy[:, None]) ** 2) / (2 * sigma**2))
        return gx.T @ gy  # (x, y)

    b, d = pairs[:, 0], pairs[:, 1]
    return norm * (bumps(b, d) - bumps(d, b))


def amplitude(diag, k, params=AmplitudeParams()):
    """Distance from the k-dimensional part of a diagram to the empty diagram."""
    if params.metric not in METRICS:
        raise UnknownMetric(f"unknown amplitude metric {params.metric!r}")
    pairs = _pairs(diag, k)
    if pairs.shape[0] == 0:
        return 0.0
    p = params.p
    life = pairs[:, 1] - pairs[:, 0]
    if params.metric == "bottleneck":
        return float(life.max() / 2.0)
    if params.metric == "wasserstein":
        return float(np.sum((life / math.sqrt(2.0)) ** p) ** (1.0 / p))

    cap = diag.cap
    if cap <= 0:
        return 0.0
    step = cap / (params.grid_size - 1)
    if params.metric == "betti":
        curve = betti_curve(diag, k, params.grid_size)
        return float((np.sum(curve**p) * step) ** (1.0 / p))
    if params.metric == "landscape":
        lam = landscape(diag, k, params.layers, params.grid_size)
        return float((np.sum(lam**p) * step) ** (1.0 / p))
    if params.metric == "silhouette":
        phi = silhouette(diag, k, params.w, params.grid_size)
        return float((np.sum(phi**p) * step) ** (1.0 / p))
    sigma = params.sigma if params.sigma is not None else cap / 10.0
    raster = heat_raster(diag, k, sigma, params.grid_size)
    return float(np.sqrt(np.sum(raster**2) * step**2))


def extract_tda_features(diag, params=AmplitudeParams()):
    """The 18 topological features of one diagram, in id order 0..17."""
    values = []
    for metric in METRICS:
        mp = params.replace(metric=metric)
        values.extend(amplitude(diag, k, mp) for k in (0, 1))
    values.extend(persistence_entropy(diag, k, normalized=True) for k in (0, 1))
    values.extend(persistence_entropy(diag, k, normalized=False) for k in (0, 1))
    values.extend(float(num_points(diag, k)) for k in (0, 1))
    return TdaFeatureVector(np.array(values), np.arange(N_TDA_FEATURES))
