"""Simulation DGPs, experiment drivers, metrics, seasonal adjustment, and I/O."""

from . import dgp, experiments, io, metrics, seasonal  # noqa: F401
