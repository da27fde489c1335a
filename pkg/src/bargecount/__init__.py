"""Barge-count estimation from AIS vessel trajectories."""

__version__ = "0.1.0"
