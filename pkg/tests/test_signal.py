import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.signal import correlate

from ecogtda.errors import (EventOutOfRange, InconsistentChannelCount, IOFailure, NyquistViolation,
                            ParseError, TooFewChannels)
from ecogtda.signal import (VARIANTS, EventTable, MultichannelRecording, bandcut, butter_sos,
                            car_filter, load_events, load_recording, notch_cascade, notch_sos,
                            save_events, save_recording, segment_epochs, sos_gain, zero_phase)

FS = 1200.0


def sine(freq, amp=1.0, n=2400, channels=1, fs=FS):
    t = np.arange(n) / fs
    return np.tile(amp * np.sin(2 * np.pi * freq * t), (channels, 1))


def rms(x):
    return float(np.sqrt(np.mean(np.square(x))))


# -- I/O ------------------------------------------------------------------------------


def test_csv_three_channels_ten_rows(tmp_path):
    path = tmp_path / "rec.csv"
    rows = ["a,b,c"] + [f"{i},{i * 2},{i * 3}" for i in range(10)]
    path.write_text("\n".join(rows) + "\n")
    rec = load_recording(path, "csv", sampling_rate=500.0)
    assert rec.samples.shape == (3, 10)
    assert rec.channel_names == ["a", "b", "c"]
    assert rec.sampling_rate == 500.0
    np.testing.assert_array_equal(rec.samples[2], np.arange(10) * 3)


def test_csv_nan_is_parse_error_with_line(tmp_path):
    path = tmp_path / "rec.csv"
    path.write_text("a,b\n1,2\n3,NaN\n")
    with pytest.raises(ParseError, match="line 3"):
        load_recording(path, "csv")


def test_csv_ragged_rows(tmp_path):
    path = tmp_path / "rec.csv"
    path.write_text("a,b\n1,2\n3\n")
    with pytest.raises(InconsistentChannelCount):
        load_recording(path, "csv")


def test_missing_file():
    with pytest.raises(IOFailure):
        load_recording("/nonexistent/rec.csv", "csv")


def test_raw_round_trip_keeps_rate(tmp_path, rng):
    rec = MultichannelRecording(rng.normal(size=(60, 300)), 1200.0)
    save_recording(rec, tmp_path / "r.raw", "raw_f64")
    back = load_recording(tmp_path / "r.raw", "raw_f64")
    assert back.sampling_rate == 1200.0
    np.testing.assert_array_equal(back.samples, rec.samples)
    data = (tmp_path / "r.raw").read_bytes()
    assert data[:4] == b"TFR1"
    assert len(data) == 16 + 8 * 60 * 300


def test_raw_bad_magic(tmp_path):
    (tmp_path / "r.raw").write_bytes(b"XXXX" + bytes(12) + bytes(16))
    with pytest.raises(ParseError):
        load_recording(tmp_path / "r.raw", "raw_f64")


def test_csv_round_trip_exact(tmp_path, rng):
    rec = MultichannelRecording(rng.normal(size=(3, 20)), 250.0, ["x", "y", "z"])
    save_recording(rec, tmp_path / "r.csv", "csv")
    back = load_recording(tmp_path / "r.csv", "csv", sampling_rate=250.0)
    np.testing.assert_array_equal(back.samples, rec.samples)


def test_events_round_trip(tmp_path):
    ev = EventTable([0, 2400, 4800], [2400, 1800, 2400], ["Rest", "Rock", "Paper"])
    save_events(ev, tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text().splitlines()[0] == "onset_sample,duration_samples,label"
    back = load_events(tmp_path / "e.csv")
    assert back.label == ev.label
    np.testing.assert_array_equal(back.onset, ev.onset)


def test_events_reject_unknown_label_and_order():
    with pytest.raises(ParseError):
        EventTable([0], [10], ["Lizard"])
    with pytest.raises(ParseError):
        EventTable([10, 5], [1, 1], ["Rest", "Rest"])


# -- CAR --------------------------------------------------------------------------------


def test_car_constant_channels_vanish():
    rec = MultichannelRecording(np.full((4, 50), 5.0), FS)
    np.testing.assert_array_equal(car_filter(rec).samples, 0.0)


def test_car_two_channels():
    rec = MultichannelRecording(np.array([[1.0] * 5, [3.0] * 5]), FS)
    out = car_filter(rec).samples
    np.testing.assert_allclose(out[0], -1.0)
    np.testing.assert_allclose(out[1], 1.0)


def test_car_column_sums(rng):
    out = car_filter(MultichannelRecording(rng.normal(size=(4, 100)), FS)).samples
    assert np.abs(out.sum(axis=0)).max() < 1e-9


def test_car_needs_two_channels():
    with pytest.raises(TooFewChannels):
        car_filter(MultichannelRecording(np.zeros((1, 10)), FS))


@given(st.integers(2, 8), st.integers(1, 50), st.integers(0, 2**32 - 1))
def test_car_idempotent(c, n, seed):
    x = np.random.default_rng(seed).normal(size=(c, n)) * 100
    once = car_filter(MultichannelRecording(x, FS))
    np.testing.assert_allclose(car_filter(once).samples, once.samples, atol=1e-12)


# -- notch ------------------------------------------------------------------------------


def test_notch_removes_50hz():
    x = sine(50.0, n=12000)
    out = notch_cascade(MultichannelRecording(x, FS)).samples
    mid = slice(2400, 9600)
    assert rms(out[:, mid]) <= 0.01 * rms(x[:, mid])


def test_notch_passes_20hz():
    x = sine(20.0, n=12000)
    out = notch_cascade(MultichannelRecording(x, FS)).samples
    mid = slice(2400, 9600)
    assert abs(rms(out[:, mid]) / rms(x[:, mid]) - 1) < 0.01


def test_notch_designed_attenuation_at_every_harmonic():
    stages = notch_sos(FS)
    for k in range(1, 7):
        g = np.prod([sos_gain(s, [50.0 * k], FS)[0] for s in stages])
        # forward-backward squares the magnitude
        assert 20 * math.log10(g**2 + 1e-300) <= -40


def test_notch_zero_in_zero_out():
    out = notch_cascade(MultichannelRecording(np.zeros((2, 1000)), FS)).samples
    np.testing.assert_array_equal(out, 0.0)


def test_notch_nyquist_violation():
    with pytest.raises(NyquistViolation):
        notch_sos(500.0, 50.0, 6)


def test_sos_gain_matches_scipy():
    from scipy.signal import sosfreqz
    sos = butter_sos(4, (60, 90), FS, "bandpass")
    f = np.array([10.0, 60.0, 75.0, 120.0, 400.0])
    _, h = sosfreqz(sos, worN=f, fs=FS)
    np.testing.assert_allclose(sos_gain(sos, f, FS), np.abs(h), rtol=1e-10, atol=1e-14)


# -- bandcut ------------------------------------------------------------------------------


def test_v1_suppresses_top_of_spectrum(rng):
    x = rng.normal(size=(1, 24000))
    y = bandcut(MultichannelRecording(np.vstack([x, -x]), FS), VARIANTS["V1"]).samples[0]
    spec = np.abs(np.fft.rfft(y)) ** 2
    f = np.fft.rfftfreq(len(y), 1 / FS)
    assert spec[(f >= 550) & (f <= 600)].sum() < 0.05 * spec[(f >= 10) & (f <= 450)].sum()


def test_v4_skips_car():
    x = sine(200.0, channels=2) + 1.0
    out = bandcut(MultichannelRecording(x, FS), VARIANTS["V4"]).samples
    np.testing.assert_array_equal(out[0], out[1])
    assert rms(out) > 0.5


def test_v2_rejects_75hz():
    x = np.vstack([sine(75.0, n=12000)[0], np.zeros(12000)])
    out = bandcut(MultichannelRecording(x, FS), VARIANTS["V2"]).samples
    mid = slice(2400, 9600)
    # CAR halves the channel, the band-pass must remove the rest
    assert rms(out[0, mid]) < 0.05 * rms(x[0, mid])


def test_variants_table():
    assert {k: (v.band, v.apply_car) for k, v in VARIANTS.items()} == {
        "V1": ((1.0, 500.0), True), "V2": ((100.0, 500.0), True),
        "V3": ((50.0, 300.0), True), "V4": ((1.0, 500.0), False)}


def test_band_above_nyquist():
    with pytest.raises(NyquistViolation):
        butter_sos(4, (100, 700), FS, "bandpass")


@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_filters_linear(seed, a, b):
    r = np.random.default_rng(seed)
    x, y = r.normal(size=(2, 3, 600))
    sos = butter_sos(4, (60, 90), FS, "bandpass")
    lhs = zero_phase(sos, a * x + b * y, 4)
    rhs = a * zero_phase(sos, x, 4) + b * zero_phase(sos, y, 4)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


def test_zero_phase_no_lag(rng):
    x = zero_phase(butter_sos(4, (60, 90), FS, "bandpass"), rng.normal(size=6000), 4)
    y = zero_phase(butter_sos(4, (40, 120), FS, "bandpass"), x, 4)
    c = correlate(y, x, mode="full")
    assert int(np.argmax(c)) - (len(x) - 1) == 0


# -- epochs --------------------------------------------------------------------------------


def test_epoch_full_length(rng):
    rec = MultichannelRecording(rng.normal(size=(3, 2400)), FS)
    (ep,) = segment_epochs(rec, EventTable([0], [2400], ["Rest"]))
    assert ep.valid_length == 2400 and ep.window == 2400
    np.testing.assert_array_equal(ep.samples, rec.samples)


def test_epoch_zero_padding(rng):
    rec = MultichannelRecording(rng.normal(size=(3, 2400)) + 1.0, FS)
    (ep,) = segment_epochs(rec, EventTable([0], [1800], ["Rock"]))
    assert ep.valid_length == 1800
    assert np.all(ep.samples[:, 1800:] == 0.0)
    np.testing.assert_array_equal(ep.samples[:, :1800], rec.samples[:, :1800])


def test_epoch_out_of_range(rng):
    rec = MultichannelRecording(rng.normal(size=(2, 1000)), FS)
    with pytest.raises(EventOutOfRange):
        segment_epochs(rec, EventTable([500], [600], ["Rest"]))


def test_epochs_from_synthetic_session():
    from ecogtda.synthetic import SyntheticSpec, generate_synthetic
    spec = SyntheticSpec(n_channels=4, trials_per_class={"Rest": 30, "Rock": 30, "Paper": 30, "Scissors": 30},
                         trial_s=0.25, gap_s=(0.0, 0.1), burst_channels=2)
    rec, ev = generate_synthetic(spec, seed=3)
    eps = segment_epochs(rec, ev, window_s=0.25)
    assert len(eps) == 120
    assert [e.label for e in eps] == ev.label
