"""Generalization bounds for learning from classical-quantum data."""

__version__ = "0.1.0"
