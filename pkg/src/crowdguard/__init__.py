"""Crowd congestion detection and robotic congestion control."""

__version__ = "0.1.0"
