"""Equilibria and relative-energy decay for barotropic flows with in/out-flux boundaries."""

__version__ = "0.1.0"
