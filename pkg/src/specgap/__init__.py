"""Negative-spectrum laboratory for Schroedinger operators H = A - sigma V."""

__version__ = "0.1.0"
