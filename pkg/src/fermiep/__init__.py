"""Exceptional points of interacting fermions on twisted rings."""

__version__ = "0.1.0"
