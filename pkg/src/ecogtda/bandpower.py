"""Log band-power features.

Each channel is band-passed, squared, averaged over the valid part of the
epoch and log-scaled. Features are laid out band-major: all channels of the
first band, then all channels of the second, and so on. Feature ids start at
18 so they follow the 18 topological features.
"""

from dataclasses import dataclass

import numpy as np

from .errors import EmptyEpoch
from .signal import Epoch, butter_sos, zero_phase

FIRST_PB_ID = 18
POWER_FLOOR = 1e-12


@dataclass(frozen=True)
class BandDefinition:
    low: float
    high: float
    order: int = 4


DEFAULT_BANDS = (
    BandDefinition(60.0, 90.0),
    BandDefinition(110.0, 140.0),
    BandDefinition(160.0, 190.0),
)


@dataclass
class PowerBandFeatures:
    values: np.ndarray
    feature_ids: np.ndarray


def band_filter_epoch(epoch, band, fs):
    """Filter the valid region of an epoch; the padded tail stays exactly zero."""
    sos = butter_sos(band.order, (band.low, band.high), fs, "bandpass")
    out = np.zeros_like(epoch.samples)
    if epoch.valid_length > 0:
        out[:, : epoch.valid_length] = zero_phase(sos, epoch.valid, band.order)
    return Epoch(out, epoch.label, epoch.trial_id, epoch.valid_length)


def log_band_power(filtered):
    if filtered.valid_length <= 0:
        raise EmptyEpoch(f"epoch {filtered.trial_id} has no valid samples")
    power = np.mean(filtered.valid**2, axis=1)
    return np.log(np.maximum(power, POWER_FLOOR))


def extract_pb_features(epoch, bands=DEFAULT_BANDS, fs=1200.0):
    values = np.concatenate([log_band_power(band_filter_epoch(epoch, b, fs)) for b in bands])
    ids = np.arange(FIRST_PB_ID, FIRST_PB_ID + len(values))
    return PowerBandFeatures(values, ids)


def pb_feature_names(n_channels, bands=DEFAULT_BANDS):
    return [
        f"pb_{b.low:g}-{b.high:g}Hz_ch{c}" for b in bands for c in range(n_channels)
    ]
