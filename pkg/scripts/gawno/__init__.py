"""
GAWNO: generative adversarial wavelet neural operators for fault detection and
isolation in multivariate process data.
"""

__version__ = "0.1.0"
