"""Recording I/O, spatial/temporal filtering and epoch segmentation.

Temporal filters are Butterworth designs realised as second-order sections and
run forward-backward, so they are zero phase. Before filtering, each channel is
reflect-padded by three times the filter order at both ends and trimmed after.
"""

import csv
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal as sps

from .errors import (
    EventOutOfRange,
    InconsistentChannelCount,
    IOFailure,
    NyquistViolation,
    ParseError,
    TooFewChannels,
)

CLASSES = ("Rest", "Rock", "Paper", "Scissors")
RAW_MAGIC = b"TFR1"
RAW_HEADER = struct.Struct("<4sII4x")  # 16 bytes: magic, channels, sampling rate, reserved


@dataclass
class MultichannelRecording:
    samples: np.ndarray  # channels x time
    sampling_rate: float
    channel_names: list = field(default_factory=list)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 2:
            raise InconsistentChannelCount("samples must be a channels x time matrix")
        if not self.sampling_rate > 0:
            raise ParseError(f"sampling rate must be positive, got {self.sampling_rate}")
        if not np.isfinite(self.samples).all():
            raise ParseError("recording contains NaN or Inf")
        if not self.channel_names:
            self.channel_names = [f"ch{i}" for i in range(self.n_channels)]
        if len(self.channel_names) != self.n_channels:
            raise InconsistentChannelCount(
                f"{len(self.channel_names)} channel names for {self.n_channels} channels"
            )

    @property
    def n_channels(self):
        return self.samples.shape[0]

    @property
    def n_samples(self):
        return self.samples.shape[1]

    @property
    def nyquist(self):
        return self.sampling_rate / 2.0

    def with_samples(self, samples):
        return MultichannelRecording(samples, self.sampling_rate, list(self.channel_names))


@dataclass
class EventTable:
    onset: np.ndarray
    duration: np.ndarray
    label: list

    def __post_init__(self):
        self.onset = np.asarray(self.onset, dtype=np.int64)
        self.duration = np.asarray(self.duration, dtype=np.int64)
        self.label = list(self.label)
        if not (len(self.onset) == len(self.duration) == len(self.label)):
            raise ParseError("event columns differ in length")
        if len(self.onset) and (np.diff(self.onset) <= 0).any():
            raise ParseError("event onsets must be strictly increasing")
        if (self.onset < 0).any() or (self.duration < 0).any():
            raise ParseError("event onsets and durations must be non-negative")
        unknown = sorted(set(self.label) - set(CLASSES))
        if unknown:
            raise ParseError(f"unknown event labels {unknown}")

    def __len__(self):
        return len(self.onset)


@dataclass
class Epoch:
    samples: np.ndarray  # channels x window, zero beyond valid_length
    label: str
    trial_id: int
    valid_length: int

    @property
    def window(self):
        return self.samples.shape[1]

    @property
    def valid(self):
        return self.samples[:, : self.valid_length]


@dataclass(frozen=True)
class PreprocVariant:
    variant_id: str
    band: tuple
    apply_car: bool


VARIANTS = {
    "V1": PreprocVariant("V1", (1.0, 500.0), True),
    "V2": PreprocVariant("V2", (100.0, 500.0), True),
    "V3": PreprocVariant("V3", (50.0, 300.0), True),
    "V4": PreprocVariant("V4", (1.0, 500.0), False),
}


# -- I/O ---------------------------------------------------------------------


def load_recording(path, format="csv", sampling_rate=1200.0):
    """Read a recording.

    CSV files carry channel names in the first row and one sample per row; they
    have no header field for the rate, so ``sampling_rate`` supplies it.
    ``raw_f64`` files carry their own rate and ignore the argument.
    """
    path = Path(path)
    if not path.exists():
        raise IOFailure(f"no such file: {path}")
    if format == "csv":
        return _load_csv(path, sampling_rate)
    if format == "raw_f64":
        return _load_raw(path)
    raise ParseError(f"unknown recording format {format!r}")


def _load_csv(path, sampling_rate):
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise IOFailure(str(exc)) from exc
    with fh:
        reader = csv.reader(fh)
        try:
            names = [n.strip() for n in next(reader)]
        except StopIteration:
            raise ParseError("empty file", line=1) from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(names):
                raise InconsistentChannelCount(
                    f"line {lineno}: {len(row)} values for {len(names)} channels"
                )
            try:
                values = [float(v) for v in row]
            except ValueError:
                raise ParseError(f"not a number in {row!r}", line=lineno) from None
            if not all(math.isfinite(v) for v in values):
                raise ParseError("NaN or Inf value", line=lineno)
            rows.append(values)
    if not names or not rows:
        raise ParseError("recording needs at least one channel and one sample")
    return MultichannelRecording(np.array(rows).T, float(sampling_rate), names)


def _load_raw(path):
    data = path.read_bytes()
    if len(data) < RAW_HEADER.size:
        raise ParseError("file shorter than the 16-byte header")
    magic, channels, rate = RAW_HEADER.unpack_from(data)
    if magic != RAW_MAGIC:
        raise ParseError(f"bad magic {magic!r}")
    body = len(data) - RAW_HEADER.size
    if channels == 0 or body % (8 * channels):
        raise InconsistentChannelCount(f"{body} payload bytes do not split into {channels} channels")
    samples = np.frombuffer(data, dtype="<f8", offset=RAW_HEADER.size).reshape(channels, -1)
    if samples.shape[1] == 0:
        raise ParseError("recording has no samples")
    return MultichannelRecording(samples.copy(), float(rate))


def save_recording(rec, path, format="csv"):
    path = Path(path)
    if format == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(rec.channel_names)
            writer.writerows([[repr(float(v)) for v in row] for row in rec.samples.T])
    elif format == "raw_f64":
        with open(path, "wb") as fh:
            fh.write(RAW_HEADER.pack(RAW_MAGIC, rec.n_channels, int(round(rec.sampling_rate))))
            fh.write(np.ascontiguousarray(rec.samples, dtype="<f8").tobytes())
    else:
        raise ParseError(f"unknown recording format {format!r}")


def load_events(path):
    path = Path(path)
    if not path.exists():
        raise IOFailure(f"no such file: {path}")
    onset, duration, label = [], [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["onset_sample", "duration_samples", "label"]:
            raise ParseError(f"unexpected events header {reader.fieldnames}", line=1)
        for lineno, row in enumerate(reader, start=2):
            try:
                onset.append(int(row["onset_sample"]))
                duration.append(int(row["duration_samples"]))
            except (TypeError, ValueError):
                raise ParseError(f"bad event row {row}", line=lineno) from None
            label.append(row["label"])
    return EventTable(onset, duration, label)


def save_events(events, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["onset_sample", "duration_samples", "label"])
        for o, d, lab in zip(events.onset, events.duration, events.label):
            writer.writerow([int(o), int(d), lab])


# -- filters -----------------------------------------------------------------


def butter_sos(order, band, fs, btype):
    """Butterworth second-order sections (bilinear transform, pre-warped)."""
    nyq = fs / 2.0
    edges = np.atleast_1d(np.asarray(band, dtype=float))
    if (edges <= 0).any() or (edges >= nyq).any():
        raise NyquistViolation(f"band {tuple(edges)} Hz outside (0, {nyq}) Hz")
    if len(edges) == 2 and edges[0] >= edges[1]:
        raise NyquistViolation(f"band {tuple(edges)} has low >= high")
    return sps.butter(order, edges, btype=btype, fs=fs, output="sos")


def zero_phase(sos, x, order):
    """Forward-backward SOS filtering along the last axis."""
    x = np.asarray(x, dtype=np.float64)
    pad = min(3 * order, x.shape[-1] - 1)
    if pad < 1:
        return sps.sosfiltfilt(sos, x, axis=-1, padlen=0)
    return sps.sosfiltfilt(sos, x, axis=-1, padtype="even", padlen=pad)


def car_filter(rec):
    """Common average reference: subtract the cross-channel mean at every sample."""
    if rec.n_channels < 2:
        raise TooFewChannels("CAR needs at least two channels")
    x = rec.samples
    return rec.with_samples(x - x.mean(axis=0, keepdims=True))


def notch_sos(fs, base_freq=50.0, n_harmonics=6, order=5, half_width=1.0):
    top = n_harmonics * base_freq + half_width
    if top >= fs / 2.0:
        raise NyquistViolation(
            f"harmonic {n_harmonics} x {base_freq} Hz (+{half_width}) reaches Nyquist {fs / 2.0} Hz"
        )
    return [
        butter_sos(order, (k * base_freq - half_width, k * base_freq + half_width), fs, "bandstop")
        for k in range(1, n_harmonics + 1)
    ]


def notch_cascade(rec, base_freq=50.0, n_harmonics=6, order=5, half_width=1.0):
    stages = notch_sos(rec.sampling_rate, base_freq, n_harmonics, order, half_width)
    x = rec.samples
    for sos in stages:
        x = zero_phase(sos, x, order)
    return rec.with_samples(x)


def bandcut(rec, variant, order=4):
    """Band-pass a recording for one preprocessing variant (CAR first iff the variant says so)."""
    sos = butter_sos(order, variant.band, rec.sampling_rate, "bandpass")
    if variant.apply_car:
        rec = car_filter(rec)
    return rec.with_samples(zero_phase(sos, rec.samples, order))


def sos_gain(sos, freqs, fs):
    """|H(f)| of a cascade of biquads, evaluated directly from the coefficients."""
    z = np.exp(-2j * np.pi * np.asarray(freqs, dtype=float) / fs)
    h = np.ones_like(z)
    for b0, b1, b2, a0, a1, a2 in np.asarray(sos):
        h *= (b0 + b1 * z + b2 * z * z) / (a0 + a1 * z + a2 * z * z)
    return np.abs(h)


# -- segmentation ------------------------------------------------------------


def segment_epochs(rec, events, window_s=2.0):
    """Cut one fixed-length epoch per event, zero-padding at the end when the event is shorter."""
    window = int(round(window_s * rec.sampling_rate))
    epochs = []
    for trial_id, (onset, duration, label) in enumerate(
        zip(events.onset, events.duration, events.label)
    ):
        if onset < 0 or onset + duration > rec.n_samples:
            raise EventOutOfRange(
                f"event {trial_id} [{onset}, {onset + duration}) outside recording of {rec.n_samples} samples"
            )
        valid = int(min(duration, window, rec.n_samples - onset))
        buf = np.zeros((rec.n_channels, window))
        buf[:, :valid] = rec.samples[:, onset : onset + valid]
        epochs.append(Epoch(buf, label, trial_id, valid))
    return epochs
