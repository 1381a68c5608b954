"""Numerical tools for almost complex geometry on coordinate patches."""

__version__ = "0.1.0"
