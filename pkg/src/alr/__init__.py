"""Numerical laboratory for anomalous localized resonance in plasmonic shells."""

__version__ = "0.1.0"
