"""Holonomy, retrace reduction and thin-loop constructions for piecewise-smooth based loops."""

__version__ = "0.1.0"
