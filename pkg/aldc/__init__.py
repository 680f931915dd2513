"""Generalized semi-supervised FSCIL simulation engine (ALT thresholds + B2N calibration)."""

__version__ = "0.1.0"
