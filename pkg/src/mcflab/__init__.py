"""Numerical laboratory for mean curvature flow of rotationally symmetric entire graphs."""

__version__ = "0.1.0"
