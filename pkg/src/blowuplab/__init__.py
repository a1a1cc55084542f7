"""Numerical laboratory for complex semilinear heat blowup experiments."""

__version__ = "0.1.0"
