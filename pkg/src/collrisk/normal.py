"""Standard normal primitives and risk functionals evaluated at N(0, 1)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

from .errors import DomainError, InvalidDistortion, QuadratureFailure
from .lattice import LatticeDistribution
from .risk import AVaR, Distortion, DistortionFunction, Expectile, OneSidedMoment, RiskMeasureSpec, VaR

QUAD_BOUND = 12.0
QUAD_TOL = 1e-8

_SQRT_2PI = math.sqrt(2.0 * math.pi)

# Rational approximation of the normal quantile (P. J. Acklam), relative
# error about 1e-9 before polishing.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def std_normal_cdf(x):
    return special.ndtr(x)


def std_normal_pdf(x):
    x = np.asarray(x, dtype=np.float64)
    return np.exp(-0.5 * x * x) / _SQRT_2PI


def _initial_quantile(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    if p > 1.0 - _P_LOW:
        return -_initial_quantile(1.0 - p)
    q = p - 0.5
    r = q * q
    return ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
            / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))


def std_normal_quantile(alpha: float) -> float:
    """``Phi^{-1}(alpha)``: rational start, one Halley step on the CDF residual."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {alpha}")
    x = _initial_quantile(alpha)
    # residual in the upper tail via the survival function to keep precision
    if x > 0:
        e = -(special.ndtr(-x) - (1.0 - alpha))
    else:
        e = special.ndtr(x) - alpha
    u = e * _SQRT_2PI * math.exp(0.5 * x * x)
    return float(x - u / (1.0 + 0.5 * x * u))


@dataclass(frozen=True)
class NormalRiskConstant:
    measure: RiskMeasureSpec
    value: float
    method: str
    abs_err_bound: float


def _quad(fun, a: float, b: float, points=None) -> tuple[float, float]:
    pts = None
    if points is not None:
        inside = [p for p in points if a < p < b]
        pts = inside or None
    val, err = integrate.quad(fun, a, b, points=pts, epsabs=1e-11, epsrel=1e-11, limit=400)
    return val, err


def distortion_at_std_normal(g: DistortionFunction) -> tuple[float, float]:
    """Quadrature of the distortion integral with ``F = Phi`` on ``[-12, 12]``."""
    kinks = [std_normal_quantile(t) for t in g.kinks()]

    def lower(x):
        return float(g(special.ndtr(x)))

    def upper(x):
        return float(1.0 - g(special.ndtr(x)))

    neg, e1 = _quad(lower, -QUAD_BOUND, 0.0, kinks)
    pos, e2 = _quad(upper, 0.0, QUAD_BOUND, kinks)
    err = e1 + e2
    if err > QUAD_TOL:
        raise QuadratureFailure(f"distortion quadrature error {err:.2e} exceeds {QUAD_TOL:.0e}")
    return pos - neg, err


def risk_of_std_normal(measure: RiskMeasureSpec) -> NormalRiskConstant:
    """Value of the risk functional at the standard normal law."""
    if isinstance(measure, VaR):
        return NormalRiskConstant(measure, std_normal_quantile(measure.alpha), "closed_form", 1e-12)
    if isinstance(measure, AVaR):
        z = std_normal_quantile(measure.alpha)
        value = float(std_normal_pdf(z)) / (1.0 - measure.alpha)
        return NormalRiskConstant(measure, value, "closed_form", 1e-12)
    if isinstance(measure, Distortion):
        if not isinstance(measure.g, DistortionFunction):
            raise InvalidDistortion("distortion measure needs a DistortionFunction")
        value, err = distortion_at_std_normal(measure.g)
        return NormalRiskConstant(measure, value, "quadrature", max(err, 1e-12))
    if isinstance(measure, OneSidedMoment):
        p = measure.p
        moment, err = _quad(lambda x: x**p * math.exp(-0.5 * x * x) / _SQRT_2PI, 0.0, QUAD_BOUND)
        if err > QUAD_TOL:
            raise QuadratureFailure(f"moment quadrature error {err:.2e} exceeds {QUAD_TOL:.0e}")
        value = measure.a * moment ** (1.0 / p)
        bound = measure.a * moment ** (1.0 / p - 1.0) * err / p
        return NormalRiskConstant(measure, value, "quadrature", max(bound, 1e-12))
    if isinstance(measure, Expectile):
        alpha = measure.alpha

        def foc(m):
            pdf = math.exp(-0.5 * m * m) / _SQRT_2PI
            up = pdf - m * special.ndtr(-m)
            down = m * special.ndtr(m) + pdf
            return alpha * up - (1.0 - alpha) * down

        root = optimize.brentq(foc, -QUAD_BOUND, QUAD_BOUND, xtol=1e-13, rtol=4 * np.finfo(float).eps)
        return NormalRiskConstant(measure, float(root), "root_find", 1e-10)
    raise TypeError(f"not a risk measure: {measure!r}")


def std_normal_lattice(step: float = 1e-3, bound: float = 8.0) -> LatticeDistribution:
    """N(0, 1) rounded to the nearest point of ``step * Z`` within ``[-bound, bound]``."""
    k = math.floor(bound / step)
    x = step * np.arange(-k, k + 1)
    edges = np.concatenate([x - 0.5 * step, [x[-1] + 0.5 * step]])
    cdf = special.ndtr(edges)
    q = np.diff(cdf)
    q[0] += cdf[0]
    q[-1] += 1.0 - cdf[-1]
    return LatticeDistribution(x[0], step, q / math.fsum(q))
