"""Spectral 2-D Navier-Stokes with Poisson noise: solvers, rate function and experiments."""

from ._core import (
    Basis,
    Error,
    __version__,
    config_hash,
    entropy_l,
    inner_h,
    nonlinear_B,
    norms,
    random_field,
    rate_terminal,
    read_trajectory,
    recompute_verdicts,
    run_experiment,
    snapshot_header,
    solve_nse,
    to_physical,
    trilinear_b,
    wilson_interval,
)

__all__ = [
    "Basis",
    "Error",
    "__version__",
    "config_hash",
    "entropy_l",
    "inner_h",
    "nonlinear_B",
    "norms",
    "random_field",
    "rate_terminal",
    "read_trajectory",
    "recompute_verdicts",
    "run_experiment",
    "snapshot_header",
    "solve_nse",
    "to_physical",
    "trilinear_b",
    "wilson_interval",
]
