"""Sectional photoacoustic tomography: forward models and exact inversions."""

__version__ = "0.1.0"
