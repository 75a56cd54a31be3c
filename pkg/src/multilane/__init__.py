"""Multilane exclusion processes: equilibrium manifolds, macroscopic flux,
hydrodynamic and relaxation solvers, and kinetic Monte Carlo simulation."""

__version__ = "0.1.0"
