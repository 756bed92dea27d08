"""Premium estimators for the individual risk of a collective of size n.

Two estimators of ``R(mu^{*n}) / n`` from a claim sample of size ``u``:

* ``normal_approx_premium``: ``m_hat + s_hat * R(N(0,1)) / sqrt(n)``, the
  risk of the fitted normal law ``N(n m_hat, n s_hat^2)`` divided by n;
* ``plugin_premium``: the risk of the n-fold convolution of the empirical
  claim law, divided by n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .convolve import DEFAULT_TRUNC_EPS, convolve_n
from .errors import DomainError
from .lattice import ClaimSample, empirical_measure
from .normal import risk_of_std_normal, std_normal_quantile
from .risk import RiskMeasureSpec, evaluate


@dataclass(frozen=True)
class PremiumReport:
    method: str
    n: int
    u: int
    premium_per_risk: float
    m_hat: float
    s_hat: float
    normal_constant: float
    ci_low: float = math.nan
    ci_high: float = math.nan
    ci_level: float = math.nan

    def as_row(self) -> dict:
        return {
            "method": self.method,
            "n": self.n,
            "u": self.u,
            "premium": self.premium_per_risk,
            "m_hat": self.m_hat,
            "s_hat": self.s_hat,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
        }


def sample_moments(sample: ClaimSample) -> tuple[float, float]:
    """Sample mean and the 1/u-normalized standard deviation."""
    v = sample.values
    m = math.fsum(v) / v.size
    s2 = math.fsum((v - m) ** 2) / v.size
    return m, math.sqrt(s2)


def normal_approx_premium(
    sample: ClaimSample,
    n: int,
    measure: RiskMeasureSpec,
    normal_constant: float | None = None,
) -> PremiumReport:
    """Standard-deviation-principle premium with loading ``R(N(0,1)) / sqrt(n)``.

    ``normal_constant`` may be passed to skip recomputing ``R(N(0,1))`` in
    Monte-Carlo loops.
    """
    if n < 1:
        raise ValueError("n must be positive")
    m_hat, s_hat = sample_moments(sample)
    r0 = risk_of_std_normal(measure).value if normal_constant is None else normal_constant
    premium = m_hat + s_hat * r0 / math.sqrt(n)
    return PremiumReport("normal_approx", n, len(sample), premium, m_hat, s_hat, r0)


def plugin_premium(
    sample: ClaimSample,
    n: int,
    measure: RiskMeasureSpec,
    trunc_eps: float = DEFAULT_TRUNC_EPS,
    normal_constant: float | None = None,
) -> PremiumReport:
    """Risk of the n-fold convolution of the empirical claim law, per risk."""
    if n < 1:
        raise ValueError("n must be positive")
    m_hat, s_hat = sample_moments(sample)
    agg = convolve_n(empirical_measure(sample), n, trunc_eps).dist
    premium = evaluate(measure, agg) / n
    r0 = risk_of_std_normal(measure).value if normal_constant is None else normal_constant
    return PremiumReport("plugin", n, len(sample), premium, m_hat, s_hat, r0)


def confidence_interval(report: PremiumReport, level: float) -> tuple[float, float]:
    """Asymptotic interval ``premium - s_hat/sqrt(n) * Phi^{-1}(1 - a/2 | a/2)``."""
    if not 0.0 < level < 1.0:
        raise DomainError(f"confidence level must lie in (0, 1), got {level}")
    alpha = 1.0 - level
    half = report.s_hat / math.sqrt(report.n)
    low = report.premium_per_risk - half * std_normal_quantile(1.0 - alpha / 2.0)
    high = report.premium_per_risk - half * std_normal_quantile(alpha / 2.0)
    return low, high


def with_interval(report: PremiumReport, level: float) -> PremiumReport:
    low, high = confidence_interval(report, level)
    return replace(report, ci_low=low, ci_high=high, ci_level=level)


def claims_for(n: int, ratio_c: float) -> int:
    """Sample size ``u_n = ceil(c n)``."""
    return max(1, math.ceil(ratio_c * n - 1e-9))


def reference_premium(dist_n, measure: RiskMeasureSpec, n: int) -> float:
    """``R(mu^{*n}) / n`` from an exact aggregate law."""
    return evaluate(measure, dist_n) / n

