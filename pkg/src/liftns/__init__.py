"""Pseudospectral Navier-Stokes on the 3-torus in physical and adaptively lifted time."""

from .config import ConfigError, ExperimentConfig, parse_config, parse_config_text
from .diagnostics import DiagnosticSeries, InvarianceReport, compare_runs, energy_inequality_check
from .harness import RunReport, emit_csv, render_table, run_validation
from .lift import LiftMap, MapRangeError, RateParams, rate_function, run_lifted, step_lifted
from .solver import DivergedError, SolverParams, SolverState, integrate_physical, step_physical
from .spectral import Grid, SpectralVelocity, make_grid, taylor_green

__all__ = [
    "ConfigError",
    "DiagnosticSeries",
    "DivergedError",
    "ExperimentConfig",
    "Grid",
    "InvarianceReport",
    "LiftMap",
    "MapRangeError",
    "RateParams",
    "RunReport",
    "SolverParams",
    "SolverState",
    "SpectralVelocity",
    "compare_runs",
    "emit_csv",
    "energy_inequality_check",
    "integrate_physical",
    "make_grid",
    "parse_config",
    "parse_config_text",
    "rate_function",
    "render_table",
    "run_lifted",
    "run_validation",
    "step_lifted",
    "step_physical",
    "taylor_green",
]
