"""Synthetic multichannel recordings with class-dependent spectral and topological structure.

Classes follow a 2 x 2 design. One factor is a band-limited burst planted on
a subset of channels (Rock and Scissors carry it). The other is the shape of a
latent two-dimensional oscillator mixed into all channels: a clean limit
cycle for Paper and Scissors, a two-frequency Lissajous figure for Rest and
Rock. Neither family of features alone can tell all four classes apart.

Oscillator frequencies sit between the band-power bands and away from mains
harmonics, and both mixing vectors sum to zero across channels so that a
common average reference leaves them intact.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import SpecInvalid
from .signal import CLASSES, EventTable, MultichannelRecording

DEFAULT_COUNTS = {"Rest": 90, "Rock": 30, "Paper": 30, "Scissors": 30}


@dataclass
class SyntheticSpec:
    n_channels: int = 60
    sampling_rate: float = 1200.0
    trials_per_class: dict = field(default_factory=lambda: dict(DEFAULT_COUNTS))
    trial_s: float = 2.0
    gap_s: tuple = (0.0, 0.0)  # uniform range of rest padding between trials
    burst_classes: tuple = ("Rock", "Scissors")
    burst_freq: float = 75.0
    burst_amplitude: float = 1.0
    burst_channels: int = 20
    loop_classes: tuple = ("Paper", "Scissors")
    loop_freq: float = 223.0
    lissajous_freq: float = 229.0
    loop_amplitude: float = 1.0
    noise_level: float = 1.0
    noise_jitter: float = 0.3  # per-trial noise scale drawn from 1 +/- jitter
    line_noise: float = 0.5  # 50 Hz mains amplitude
    min_per_class: int = 5

    def validate(self):
        if self.n_channels < 2:
            raise SpecInvalid("n_channels must be >= 2")
        if not self.sampling_rate > 0:
            raise SpecInvalid("sampling_rate must be positive")
        nyq = self.sampling_rate / 2.0
        for name in ("burst_freq", "loop_freq", "lissajous_freq"):
            f = getattr(self, name)
            if not 0 < f < nyq:
                raise SpecInvalid(f"{name}={f} outside (0, {nyq}) Hz")
        unknown = sorted(set(self.trials_per_class) - set(CLASSES))
        if unknown:
            raise SpecInvalid(f"unknown classes {unknown}")
        for c, n in self.trials_per_class.items():
            if int(n) < self.min_per_class:
                raise SpecInvalid(f"class {c} has {n} trials, fewer than {self.min_per_class}")
        for name in ("burst_classes", "loop_classes"):
            bad = sorted(set(getattr(self, name)) - set(CLASSES))
            if bad:
                raise SpecInvalid(f"{name} names unknown classes {bad}")
        sigs = {(c in self.burst_classes, c in self.loop_classes) for c in self.trials_per_class}
        if len(sigs) < len(self.trials_per_class):
            raise SpecInvalid("two classes share the same signature")
        if not 0 < self.burst_channels <= self.n_channels:
            raise SpecInvalid("burst_channels must be in [1, n_channels]")
        if self.trial_s <= 0 or not 0 <= self.gap_s[0] <= self.gap_s[1]:
            raise SpecInvalid("trial_s must be positive and gap_s a non-negative range")
        if min(self.noise_level, self.burst_amplitude, self.loop_amplitude, self.line_noise) < 0:
            raise SpecInvalid("amplitudes must be non-negative")
        if not 0 <= self.noise_jitter < 1:
            raise SpecInvalid("noise_jitter must be in [0, 1)")
        return self


def _zero_mean_unit(rng, n):
    v = rng.normal(size=n)
    v -= v.mean()
    return v / np.linalg.norm(v)


def generate_synthetic(spec=None, seed=0):
    """Return ``(MultichannelRecording, EventTable)``; deterministic given the seed."""
    spec = (spec or SyntheticSpec()).validate()
    rng = np.random.default_rng(seed)
    fs = spec.sampling_rate
    d = spec.n_channels
    n_trial = int(round(spec.trial_s * fs))

    labels = [c for c in CLASSES for _ in range(int(spec.trials_per_class.get(c, 0)))]
    labels = [labels[i] for i in rng.permutation(len(labels))]
    gaps = np.round(rng.uniform(spec.gap_s[0], spec.gap_s[1], len(labels)) * fs).astype(np.int64)
    onsets = np.cumsum(gaps) + np.arange(len(labels)) * n_trial
    total = int(onsets[-1] + n_trial + gaps[0]) if labels else 0

    # mixing directions, scaled so per-channel amplitude is O(amplitude)
    scale = np.sqrt(d)
    u = _zero_mean_unit(rng, d) * scale
    v = _zero_mean_unit(rng, d)
    v -= (v @ u) / (u @ u) * u
    v = v / np.linalg.norm(v) * scale
    burst_dir = np.zeros(d)
    chans = rng.choice(d, spec.burst_channels, replace=False)
    burst_dir[chans] = rng.choice([-1.0, 1.0], spec.burst_channels)

    x = spec.noise_level * rng.normal(size=(d, total))
    t_all = np.arange(total) / fs
    x += spec.line_noise * np.sin(2 * np.pi * 50.0 * t_all + rng.uniform(0, 2 * np.pi, (d, 1)))

    t = np.arange(n_trial) / fs
    for onset, label in zip(onsets, labels):
        seg = slice(onset, onset + n_trial)
        jitter = 1.0 + spec.noise_jitter * rng.uniform(-1.0, 1.0)
        x[:, seg] *= jitter
        phase = rng.uniform(0, 2 * np.pi, 3)
        amp = spec.loop_amplitude * rng.uniform(0.8, 1.2)
        a = np.cos(2 * np.pi * spec.loop_freq * t + phase[0])
        if label in spec.loop_classes:
            b = np.sin(2 * np.pi * spec.loop_freq * t + phase[0])
        else:
            b = np.sin(2 * np.pi * spec.lissajous_freq * t + phase[1])
        x[:, seg] += amp * (np.outer(u, a) + np.outer(v, b)) / np.sqrt(2.0)
        if label in spec.burst_classes:
            burst = np.sin(2 * np.pi * spec.burst_freq * t + phase[2])
            x[:, seg] += spec.burst_amplitude * np.outer(burst_dir, burst)

    rec = MultichannelRecording(x, fs)
    events = EventTable(onsets, np.full(len(labels), n_trial), labels)
    return rec, events
