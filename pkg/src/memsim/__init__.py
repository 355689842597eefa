"""Multicore memory-system simulator with per-application slowdown estimation."""

__version__ = "0.1.0"
