"""Contextuality and Bell-type analysis of projector families on finite Hilbert spaces."""

__version__ = "0.1.0"
