"""Stride-based multivariate delay embedding.

Each embedded point starts at ``t = 0, s, 2s, ...`` and concatenates the
full channel vector at ``t, t+tau, ..., t+(N-1)tau`` (channel-major inside each
delay block). The whole padded window is used, zeros included.
"""

from dataclasses import dataclass

import numpy as np

from .errors import WindowTooShort


@dataclass(frozen=True)
class EmbeddingParams:
    tau: int = 1
    dim: int = 1
    stride: int = 10

    def __post_init__(self):
        for name in ("tau", "dim", "stride"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass
class PointCloud:
    points: np.ndarray  # n x (d * N)
    epoch_id: int = -1

    @property
    def n_points(self):
        return self.points.shape[0]


def n_embedded_points(window, p):
    span = (p.dim - 1) * p.tau
    if window < span + 1:
        return 0
    return (window - 1 - span) // p.stride + 1


def takens_embed(epoch, p=EmbeddingParams()):
    x = np.asarray(getattr(epoch, "samples", epoch), dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    window = x.shape[1]
    n = n_embedded_points(window, p)
    if n == 0:
        raise WindowTooShort(
            f"window of {window} samples is shorter than (dim-1)*tau+1 = {(p.dim - 1) * p.tau + 1}"
        )
    starts = np.arange(n) * p.stride
    blocks = [x[:, starts + j * p.tau].T for j in range(p.dim)]
    return PointCloud(np.hstack(blocks), getattr(epoch, "trial_id", -1))
