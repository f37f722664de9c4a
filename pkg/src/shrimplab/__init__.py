"""Stability-window toolkit built around double-round return maps."""

__version__ = "0.1.0"
