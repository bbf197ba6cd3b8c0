"""Topological and band-power features for multichannel time-series classification."""

__version__ = "0.1.0"
