"""Qudit QAOA for correlation clustering: simulation, gates, costs, bounds and noise."""
__version__ = "0.1.0"
