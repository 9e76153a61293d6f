"""Numerical laboratory for sweeps through quantum phase transitions."""

__version__ = "0.1.0"
