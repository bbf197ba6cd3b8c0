import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ecogtda.errors import WindowTooShort
from ecogtda.signal import Epoch
from ecogtda.takens import EmbeddingParams, n_embedded_points, takens_embed


def test_default_gives_240_points_in_60_dims(rng):
    ep = Epoch(rng.normal(size=(60, 2400)), "Rest", 4, 2400)
    cloud = takens_embed(ep)
    assert cloud.points.shape == (240, 60)
    assert cloud.epoch_id == 4


def test_identity_embedding(rng):
    x = rng.normal(size=(3, 50))
    cloud = takens_embed(x, EmbeddingParams(tau=1, dim=1, stride=1))
    np.testing.assert_array_equal(cloud.points, x.T)


def test_small_hand_enumerated_case():
    x = np.arange(10.0)[None, :]
    pts = takens_embed(x, EmbeddingParams(tau=2, dim=2, stride=3)).points
    np.testing.assert_array_equal(pts, [[0, 2], [3, 5], [6, 8]])


def test_window_too_short():
    with pytest.raises(WindowTooShort):
        takens_embed(np.zeros((2, 4)), EmbeddingParams(tau=3, dim=3))


def test_invalid_params():
    with pytest.raises(ValueError):
        EmbeddingParams(stride=0)


@given(st.integers(1, 60), st.integers(1, 5), st.integers(1, 4), st.integers(1, 7))
def test_point_count_matches_enumeration(window, tau, dim, stride):
    p = EmbeddingParams(tau, dim, stride)
    brute = sum(1 for t in range(0, window, stride) if t + (dim - 1) * tau <= window - 1)
    assert n_embedded_points(window, p) == brute


@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 3))
def test_channel_permutation_equivariance(seed, tau, dim):
    r = np.random.default_rng(seed)
    x = r.normal(size=(4, 40))
    perm = r.permutation(4)
    p = EmbeddingParams(tau, dim, 3)
    a = takens_embed(x, p).points
    b = takens_embed(x[perm], p).points
    cols = np.concatenate([perm + 4 * j for j in range(dim)])
    np.testing.assert_array_equal(b, a[:, cols])


def test_dim_one_points_are_columns(rng):
    x = rng.normal(size=(5, 100))
    pts = takens_embed(x, EmbeddingParams(stride=7)).points
    cols = {tuple(c) for c in x.T}
    assert all(tuple(p) in cols for p in pts)


def test_channel_major_within_delay_block():
    x = np.array([[0.0, 1, 2, 3], [10, 11, 12, 13]])
    pts = takens_embed(x, EmbeddingParams(tau=1, dim=2, stride=2)).points
    np.testing.assert_array_equal(pts, [[0, 10, 1, 11], [2, 12, 3, 13]])
