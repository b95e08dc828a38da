"""Stochastic modeling of residential EV charging demand."""

__version__ = "0.1.0"
