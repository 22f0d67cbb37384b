"""Spectral/phasic decomposition of feature differences between two datasets."""

__version__ = "0.1.0"
