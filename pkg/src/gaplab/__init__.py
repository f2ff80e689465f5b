"""Numerical laboratory for local spectral gaps of averaging operators."""

__version__ = "0.1.0"
