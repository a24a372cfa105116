"""Comparison principles for nonlocal parabolic equations."""

from nlcomp._core import (
    Grid,
    Kernel,
    NlcompError,
    canonical_scenario,
    convolve,
    discrete_gronwall,
    gamma,
    gaussian_bounds,
    invariant_region,
    jquotient_bound,
    kernel_norms,
    reproduce_counterexample,
    run_scenario,
    solve,
)

__all__ = [
    "Grid",
    "Kernel",
    "NlcompError",
    "canonical_scenario",
    "convolve",
    "discrete_gronwall",
    "gamma",
    "gaussian_bounds",
    "invariant_region",
    "jquotient_bound",
    "kernel_norms",
    "reproduce_counterexample",
    "run_scenario",
    "solve",
]
