"""Multilevel Monte Carlo gradient compression and a deterministic
distributed-SGD simulator."""

from mlmcgrad._core import (
    Rng,
    LevelDistribution,
    MultilevelCompressor,
    adaptive_distribution,
    analytic_variance,
    dot,
    estimate,
    estimate_adaptive,
    estimate_at_level,
    exp_decay_variance_prediction,
    fixed_point_distribution,
    floating_point_distribution,
    make_compressor,
    norms,
    qsgd_quantize,
    rand_k,
    run_experiment,
    run_mlmc_sgd,
    sample_categorical,
    static_distribution,
    verify_suite,
    verify_suite_names,
)

__all__ = [
    "Rng",
    "LevelDistribution",
    "MultilevelCompressor",
    "adaptive_distribution",
    "analytic_variance",
    "dot",
    "estimate",
    "estimate_adaptive",
    "estimate_at_level",
    "exp_decay_variance_prediction",
    "fixed_point_distribution",
    "floating_point_distribution",
    "make_compressor",
    "norms",
    "qsgd_quantize",
    "rand_k",
    "run_experiment",
    "run_mlmc_sgd",
    "sample_categorical",
    "static_distribution",
    "verify_suite",
    "verify_suite_names",
]
