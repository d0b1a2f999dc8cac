"""Frequency-dependent underground cable models and variable-frequency AC OPF."""

__version__ = "0.1.0"
