"""Neural estimation of f-divergences with constrained shallow networks.

Estimates KL, chi-squared, squared Hellinger, and total variation between
two sampled distributions by maximizing a variational objective over a
norm-constrained one-hidden-layer network class, with projected gradient
ascent. Includes ground-truth oracles (closed form, quadrature, Monte Carlo
plug-in) and a benchmark sweep harness with log-log rate fitting.
"""
from .divergences import (DivergenceKind, h_value, h_derivative,
                          optimal_potential, admissible_potential_range)
from .errors import (DivestError, DomainError, UnsupportedKind,
                     DimensionMismatch, InvalidRequest, TransformMismatch,
                     NonFinite, InvalidSigma, InvalidRho, RejectionStall,
                     DimensionTooHigh, NonIntegrable, DegenerateFit,
                     SpecParseError)
from .netclass import (NetClassSpec, NetParams, ScheduleRequest,
                       ScheduleResult, class_schedule, init_params,
                       net_eval, project, is_feasible, l1_ball_project)
from .distributions import (Distribution, Gaussian, Uniform,
                            TruncatedGaussian, Mixture, GaussianJoint2d,
                            MarginalProduct2d, mine_pair, SampleBatch,
                            sample, make_rng, derive_seed, log_ratio,
                            parse_distribution, integration_window)
from .oracle import (OracleResult, oracle_value, kl_gaussian_closed_form,
                     divergence_quadrature, divergence_mc_plugin)
from .estimator import (TrainOptions, EstimateResult, empirical_objective,
                        dv_objective, objective_value, objective_gradient,
                        train, estimate)
from .experiments import (SweepConfig, SweepRecord, RateFit, ApproxRow,
                          run_sweep, fit_rate, approx_check,
                          write_results, read_results, CSV_COLUMNS)

__version__ = "0.1.0"

__all__ = [
    "DivergenceKind", "h_value", "h_derivative", "optimal_potential",
    "admissible_potential_range",
    "DivestError", "DomainError", "UnsupportedKind", "DimensionMismatch",
    "InvalidRequest", "TransformMismatch", "NonFinite", "InvalidSigma",
    "InvalidRho", "RejectionStall", "DimensionTooHigh", "NonIntegrable",
    "DegenerateFit", "SpecParseError",
    "NetClassSpec", "NetParams", "ScheduleRequest", "ScheduleResult",
    "class_schedule", "init_params", "net_eval", "project", "is_feasible",
    "l1_ball_project",
    "Distribution", "Gaussian", "Uniform", "TruncatedGaussian", "Mixture",
    "GaussianJoint2d", "MarginalProduct2d", "mine_pair", "SampleBatch",
    "sample", "make_rng", "derive_seed", "log_ratio", "parse_distribution",
    "integration_window",
    "OracleResult", "oracle_value", "kl_gaussian_closed_form",
    "divergence_quadrature", "divergence_mc_plugin",
    "TrainOptions", "EstimateResult", "empirical_objective", "dv_objective",
    "objective_value", "objective_gradient", "train", "estimate",
    "SweepConfig", "SweepRecord", "RateFit", "ApproxRow", "run_sweep",
    "fit_rate", "approx_check", "write_results", "read_results",
    "CSV_COLUMNS",
]
