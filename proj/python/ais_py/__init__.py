"""Adaptive importance sampling for discrete Bayesian networks and influence diagrams."""

from ._core import (
    AisError,
    DomainError,
    Model,
    ParseError,
    Problem,
    StateSpaceError,
    ValidationError,
    adapt,
    estimate,
    load,
    load_file,
    prior_params,
    run_experiment,
    select_action,
    true_value,
    validate,
    weight_variance,
)

__all__ = [
    "AisError",
    "DomainError",
    "Model",
    "ParseError",
    "Problem",
    "StateSpaceError",
    "ValidationError",
    "adapt",
    "estimate",
    "load",
    "load_file",
    "prior_params",
    "run_experiment",
    "select_action",
    "true_value",
    "validate",
    "weight_variance",
]
