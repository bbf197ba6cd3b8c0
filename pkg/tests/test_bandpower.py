import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ecogtda.bandpower import (DEFAULT_BANDS, FIRST_PB_ID, POWER_FLOOR, BandDefinition,
                               band_filter_epoch, extract_pb_features, log_band_power,
                               pb_feature_names)
from ecogtda.errors import EmptyEpoch
from ecogtda.signal import Epoch

FS = 1200.0


def sine_epoch(freq, amp=1.0, channels=1, n=2400, valid=None):
    t = np.arange(n) / FS
    x = np.tile(amp * np.sin(2 * np.pi * freq * t), (channels, 1))
    valid = n if valid is None else valid
    x[:, valid:] = 0.0
    return Epoch(x, "Rest", 0, valid)


def rms(x):
    return float(np.sqrt(np.mean(np.square(x))))


def test_in_band_sine_passes():
    ep = sine_epoch(75.0)
    out = band_filter_epoch(ep, BandDefinition(60, 90), FS)
    assert abs(rms(out.valid) / rms(ep.valid) - 1) < 0.05


def test_out_of_band_sine_rejected():
    ep = sine_epoch(75.0)
    out = band_filter_epoch(ep, BandDefinition(160, 190), FS)
    assert rms(out.valid) < 0.02 * rms(ep.valid)


def test_zero_epoch_stays_zero():
    ep = Epoch(np.zeros((2, 2400)), "Rest", 0, 2400)
    np.testing.assert_array_equal(band_filter_epoch(ep, DEFAULT_BANDS[0], FS).samples, 0.0)


def test_padding_stays_zero():
    ep = sine_epoch(75.0, valid=1800)
    out = band_filter_epoch(ep, DEFAULT_BANDS[0], FS)
    assert np.all(out.samples[:, 1800:] == 0.0)


def test_log_power_of_amplitude_two_sine():
    ep = band_filter_epoch(sine_epoch(75.0, amp=2.0), BandDefinition(60, 90), FS)
    assert abs(log_band_power(ep)[0] - math.log(2.0)) < 0.05


def test_zero_channel_hits_floor():
    ep = Epoch(np.zeros((1, 100)), "Rest", 0, 100)
    assert log_band_power(ep)[0] == pytest.approx(math.log(POWER_FLOOR))
    assert math.log(POWER_FLOOR) == pytest.approx(-27.631021115928547)


def test_constant_channel_power():
    ep = Epoch(np.full((1, 100), 3.0), "Rest", 0, 100)
    assert log_band_power(ep)[0] == pytest.approx(math.log(9.0))


def test_empty_epoch():
    with pytest.raises(EmptyEpoch):
        log_band_power(Epoch(np.zeros((1, 100)), "Rest", 0, 0))


def test_default_layout_is_180_from_id_18(rng):
    ep = Epoch(rng.normal(size=(60, 2400)), "Rest", 0, 2400)
    f = extract_pb_features(ep)
    assert f.values.shape == (180,)
    np.testing.assert_array_equal(f.feature_ids, np.arange(18, 198))
    assert FIRST_PB_ID == 18


def test_two_channels_one_band(rng):
    ep = Epoch(rng.normal(size=(2, 2400)), "Rest", 0, 2400)
    assert extract_pb_features(ep, [BandDefinition(60, 90)]).values.shape == (2,)


def test_band_major_order_with_planted_burst(rng):
    x = 0.1 * rng.normal(size=(10, 2400))
    t = np.arange(2400) / FS
    x[7] += np.sin(2 * np.pi * 125.0 * t)
    f = extract_pb_features(Epoch(x, "Rest", 0, 2400)).values
    block = f[10:20]  # second band, 110-140 Hz
    assert int(np.argmax(block)) == 7
    names = pb_feature_names(10)
    assert names[17] == "pb_110-140Hz_ch7"


@given(st.floats(0.1, 50.0), st.integers(0, 2**32 - 1))
def test_scaling_shifts_by_two_log_c(c, seed):
    x = np.random.default_rng(seed).normal(size=(3, 600))
    a = extract_pb_features(Epoch(x, "Rest", 0, 600)).values
    b = extract_pb_features(Epoch(c * x, "Rest", 0, 600)).values
    np.testing.assert_allclose(b - a, 2 * math.log(c), atol=1e-6)


def test_padding_invariance(rng):
    x = rng.normal(size=(3, 1800))
    short = Epoch(x, "Rest", 0, 1800)
    padded = Epoch(np.hstack([x, np.zeros((3, 600))]), "Rest", 0, 1800)
    np.testing.assert_array_equal(extract_pb_features(short).values, extract_pb_features(padded).values)
