"""Adaptive estimation of working-memory performance surfaces."""

__version__ = "0.1.0"
