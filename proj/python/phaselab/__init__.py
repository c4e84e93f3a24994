"""Finite-difference lab for the vector Allen-Cahn system."""

from ._phaselab import (
    Connection,
    PhaselabError,
    PotentialSpec,
    fit_exponent,
    geodesic_distance,
    hyperbolicity,
    lambda_star,
    run_cli,
    set_thread_count,
    solve,
    solve_connection,
    thread_count,
)

__version__ = "0.1.0"

__all__ = [
    "Connection",
    "PhaselabError",
    "PotentialSpec",
    "fit_exponent",
    "geodesic_distance",
    "hyperbolicity",
    "lambda_star",
    "run_cli",
    "set_thread_count",
    "solve",
    "solve_connection",
    "thread_count",
]
