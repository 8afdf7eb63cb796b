"""Numerical Finsler geometry: jets, curvature, (alpha, beta)-metrics, flows."""

__version__ = "0.1.0"
