"""Pair hidden Markov model likelihoods, estimation and divergence rates."""

from ._core import (
    Model,
    PhmmError,
    __version__,
    divergence,
    experiment_config,
    log_l_fixed_t,
    log_marginal,
    log_q,
    mle,
    presets,
    run_experiment,
    simulate,
    viterbi,
)

__all__ = [
    "Model",
    "PhmmError",
    "__version__",
    "divergence",
    "experiment_config",
    "log_l_fixed_t",
    "log_marginal",
    "log_q",
    "mle",
    "presets",
    "run_experiment",
    "simulate",
    "viterbi",
]
