"""Premiums of collective insurance risks on lattice claim laws."""

__version__ = "0.1.0"

from .convolve import BACKEND, compound_binomial, convolve_direct, convolve_n, total_variation
from .diagnostics import berry_esseen_factor, convergence_curve, kolmogorov, nonuniform_kolmogorov, rate_regression
from .errors import CollRiskError
from .estimate import (
    PremiumReport,
    confidence_interval,
    normal_approx_premium,
    plugin_premium,
    sample_moments,
    with_interval,
)
from .lattice import (
    ClaimSample,
    LatticeDistribution,
    MixtureSpec,
    discretize_mixture,
    empirical_measure,
    from_pmf,
    mean,
    standardize,
    variance,
)
from .normal import risk_of_std_normal, std_normal_cdf, std_normal_quantile
from .risk import (
    AVaR,
    Distortion,
    DistortionFunction,
    Expectile,
    OneSidedMoment,
    VaR,
    evaluate,
    induced_distortion,
    parse_measure,
)

__all__ = [
    "AVaR", "BACKEND", "ClaimSample", "CollRiskError", "Distortion", "DistortionFunction", "Expectile",
    "LatticeDistribution", "MixtureSpec", "OneSidedMoment", "PremiumReport", "VaR", "berry_esseen_factor",
    "compound_binomial", "confidence_interval", "convergence_curve", "convolve_direct", "convolve_n",
    "discretize_mixture", "empirical_measure", "evaluate", "from_pmf", "induced_distortion", "kolmogorov", "mean",
    "nonuniform_kolmogorov", "normal_approx_premium", "parse_measure", "plugin_premium", "rate_regression",
    "risk_of_std_normal", "sample_moments", "standardize", "std_normal_cdf", "std_normal_quantile",
    "total_variation", "variance", "with_interval",
]
