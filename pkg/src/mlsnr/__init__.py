"""Per-stream SNR estimation for maximum-likelihood decoded spatial multiplexing."""

__version__ = "0.1.0"
