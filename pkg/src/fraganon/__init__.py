"""Fragmentation-based anonymization for high-dimensional tabular data."""

__version__ = "0.1.0"
