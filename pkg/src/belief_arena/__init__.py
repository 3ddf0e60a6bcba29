"""Solver, simulator and oracles for stochastic reachability games with
signals on both sides."""

__version__ = "0.1.0"
