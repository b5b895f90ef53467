"""Python bindings for the enksgd derivative-free minimizer."""

from ._enksgd import (
    DimensionMismatch,
    DomainError,
    EnksgdError,
    InvalidEnsembleSize,
    NonFiniteError,
    NonPositiveTransform,
    OptimizerConfig,
    Problem,
    RunResult,
    UnknownProblem,
    UnsupportedProblem,
    UsageError,
    clip_deviations,
    closed_form_covariance,
    covariance_ode_rhs,
    derive_run_seed,
    empirical_covariance,
    ensemble_deviations,
    ensemble_mean,
    least_squares_problem,
    make_problem,
    minimize,
    problem_names,
    project_derivatives,
    projection_matrix,
    recombine,
    run_experiment,
    stationary_eigen_relation,
    summarize,
    transform_matrix,
)


def config(**kwargs):
    """OptimizerConfig with the given fields set."""
    c = OptimizerConfig()
    for key, value in kwargs.items():
        if not hasattr(c, key):
            raise AttributeError(f"OptimizerConfig has no field {key!r}")
        setattr(c, key, value)
    return c


__all__ = [name for name in dir() if not name.startswith("_")]
