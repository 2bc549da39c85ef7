"""Renewable-energy-aware inter-datacenter VM migration over elastic optical networks."""

__version__ = "0.1.0"
