"""Photon-count statistics and Bayesian detection of a weak quantum emitter.

The package models three ways of looking for a single-photon emitter with
photon-number-resolving detectors: direct counting of the collected light,
and two-detector interference of that light against a coherent reference
that either does or does not hold a stable phase.  On top of the count
distributions it provides exact Bayesian inference, a log-normal
approximation for the error probability after many trials, Monte Carlo
trajectory ensembles, and grid sweeps that compare the protocols through
the number of trials each needs to reach a target confidence.
"""

from .photon_stats import (
    CountDistribution,
    DegenerateParameterError,
    DerivedMeans,
    Outcome,
    ParameterError,
    Protocol,
    ProtocolParams,
    TruncationError,
    apply_saturation,
    build_distribution,
    derived_means,
    direct_pmf,
    hom_pmf,
)
from .fock_oracle import (
    OracleConfig,
    OracleTruncationError,
    compare_with_closed_form,
    oracle_pmf,
    oracle_table,
)
from .bayes import (
    ConfidenceReport,
    DegenerateMomentsError,
    HypothesesIndistinguishableError,
    HypothesisPair,
    LogLikMoments,
    OutcomeOutsideSupportError,
    confidence,
    likelihood_ratio,
    loglik_moments,
    lognormal_pdf,
    mean_posterior,
    n_for_confidence,
    posterior_trajectory,
)
from .montecarlo import (
    EnsembleConfig,
    LogLambdaHistogram,
    TrajectoryEnsemble,
    Truth,
    loglambda_histogram,
    sample_outcome,
    simulate_ensemble,
)
from .sweep import (
    NcOptimum,
    SweepResult,
    SweepRow,
    SweepSpec,
    TWO_SIGMA,
    n_two_sigma,
    optimize_nc,
    preset,
    preset_names,
    run_sweep,
    speedup,
)

__version__ = "0.1.0"

__all__ = [
    "CountDistribution",
    "ConfidenceReport",
    "DegenerateMomentsError",
    "DegenerateParameterError",
    "DerivedMeans",
    "EnsembleConfig",
    "HypothesesIndistinguishableError",
    "HypothesisPair",
    "LogLambdaHistogram",
    "LogLikMoments",
    "NcOptimum",
    "OracleConfig",
    "OracleTruncationError",
    "Outcome",
    "OutcomeOutsideSupportError",
    "ParameterError",
    "Protocol",
    "ProtocolParams",
    "SweepResult",
    "SweepRow",
    "SweepSpec",
    "TWO_SIGMA",
    "TrajectoryEnsemble",
    "TruncationError",
    "Truth",
    "apply_saturation",
    "build_distribution",
    "compare_with_closed_form",
    "confidence",
    "derived_means",
    "direct_pmf",
    "hom_pmf",
    "likelihood_ratio",
    "loglambda_histogram",
    "loglik_moments",
    "lognormal_pdf",
    "mean_posterior",
    "n_for_confidence",
    "n_two_sigma",
    "optimize_nc",
    "oracle_pmf",
    "oracle_table",
    "posterior_trajectory",
    "preset",
    "preset_names",
    "run_sweep",
    "sample_outcome",
    "simulate_ensemble",
    "speedup",
    "__version__",
]
