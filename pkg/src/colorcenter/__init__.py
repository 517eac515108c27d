"""Vibronic, lineshape, rate and hyperfine modelling for point-defect color centers."""

__version__ = "0.1.0"
