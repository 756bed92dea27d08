"""Distance and rate diagnostics for normal approximations of aggregate laws."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import optimize, special, stats

from .convolve import DEFAULT_TRUNC_EPS, convolve_n
from .errors import InsufficientPoints, NonPositiveError, NotStandardized, ZeroVariance
from .lattice import LatticeDistribution, MixtureSpec, abs_central_moment, discretize_mixture, mean, standardize, variance

STANDARDIZED_TOL = 1e-6
_TAIL_SPAN = 50.0


@dataclass(frozen=True)
class RateReport:
    lam: float
    gamma: float
    f_factor: float
    slope_est: float
    slope_stderr: float
    points: tuple[tuple[int, float], ...]


@lru_cache(maxsize=None)
def _interior_fractions(refine: int) -> np.ndarray:
    # union over r <= refine of {i/(r+1)}: nested, so the sup estimate is monotone in refine
    fr = {Fraction(i, r + 1) for r in range(1, refine + 1) for i in range(1, r + 1)}
    return np.array(sorted(float(f) for f in fr))


def _weight(x, lam: float):
    return 1.0 + np.abs(x) ** lam


def _tail_sup(fun, lo: float, hi: float) -> float:
    grid = np.linspace(lo, hi, 2001)
    vals = fun(grid)
    k = int(np.argmax(vals))
    best = float(vals[k])
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    if b > a:
        res = optimize.minimize_scalar(lambda x: -float(fun(np.array(x))), bounds=(a, b), method="bounded",
                                       options={"xatol": 1e-12})
        best = max(best, -float(res.fun))
    return best


def nonuniform_kolmogorov(d: LatticeDistribution, lam: float, refine: int = 8) -> float:
    """``sup_x |F_d(x) - Phi(x)| (1 + |x|^lam)`` for a standardized lattice law.

    Candidates: both one-sided limits at every grid point, ``refine``-nested
    interior points per grid interval, and a one-dimensional search over the
    Gaussian tails outside the support. The result is a lower bound on the
    supremum and is nondecreasing in ``refine``.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if refine < 1:
        raise ValueError("refine must be a positive integer")
    if abs(mean(d)) > STANDARDIZED_TOL or abs(variance(d) - 1.0) > STANDARDIZED_TOL:
        raise NotStandardized("nonuniform_kolmogorov expects mean 0 and variance 1")
    x = d.points
    c = d.cumulative()
    c[-1] = 1.0
    w = _weight(x, lam)
    phi = special.ndtr(x)
    left = np.concatenate([[0.0], c[:-1]])
    best = max(float(np.max(np.abs(c - phi) * w)), float(np.max(np.abs(left - phi) * w)))
    if x.size > 1:
        fr = _interior_fractions(refine)
        xi = x[:-1, None] + d.step * fr[None, :]
        vals = np.abs(c[:-1, None] - special.ndtr(xi)) * _weight(xi, lam)
        best = max(best, float(vals.max()))
    best = max(best, _tail_sup(lambda t: special.ndtr(t) * _weight(t, lam), x[0] - _TAIL_SPAN, x[0]))
    best = max(best, _tail_sup(lambda t: special.ndtr(-t) * _weight(t, lam), x[-1], x[-1] + _TAIL_SPAN))
    return best


def kolmogorov(d: LatticeDistribution) -> float:
    """Plain ``sup_x |F_d(x) - Phi(x)|`` from the one-sided limits at the jumps."""
    x = d.points
    c = d.cumulative()
    c[-1] = 1.0
    phi = special.ndtr(x)
    left = np.concatenate([[0.0], c[:-1]])
    return max(float(np.max(np.abs(c - phi))), float(np.max(np.abs(left - phi))))


def berry_esseen_factor(d: LatticeDistribution, lam: float) -> tuple[float, float]:
    """Standardized-moment factor ``f`` and exponent ``gamma = min(1, lam - 2) / 2``."""
    if not lam > 2:
        raise ValueError(f"lambda must exceed 2, got {lam}")
    var = variance(d)
    if var <= 0:
        raise ZeroVariance("berry_esseen_factor needs positive variance")
    ratio_lam = abs_central_moment(d, lam) / var ** (lam / 2.0)
    if lam <= 3:
        f = ratio_lam
    else:
        f = max(abs_central_moment(d, 3.0) / var**1.5, ratio_lam)
    return f, min(1.0, lam - 2.0) / 2.0


def rate_regression(points: Sequence[tuple[int, float]]) -> tuple[float, float]:
    """OLS slope of ``log(err)`` on ``log(n)`` and its standard error."""
    if len(points) < 4:
        raise InsufficientPoints(f"need at least 4 points, got {len(points)}")
    n = np.array([p[0] for p in points], dtype=np.float64)
    err = np.array([p[1] for p in points], dtype=np.float64)
    if np.any(np.diff(n) <= 0):
        raise ValueError("n must be strictly increasing")
    if np.any(err <= 0):
        raise NonPositiveError("errors must be positive")
    fit = stats.linregress(np.log(n), np.log(err))
    return float(fit.slope), float(fit.stderr)


def convergence_curve(
    spec: MixtureSpec,
    lam: float,
    n_grid: Sequence[int],
    tail_eps: float = 1e-12,
    refine: int = 8,
    trunc_eps: float = DEFAULT_TRUNC_EPS,
) -> RateReport:
    """Distances ``d_lam(standardized mu^{*n}, N(0,1))`` along ``n_grid``."""
    if not n_grid:
        raise ValueError("n_grid must not be empty")
    base = discretize_mixture(spec, tail_eps)
    f, gamma = berry_esseen_factor(base, lam)
    pts = []
    for n in n_grid:
        agg = convolve_n(base, int(n), trunc_eps).dist
        pts.append((int(n), nonuniform_kolmogorov(standardize(agg), lam, refine)))
    if len(pts) >= 4:
        slope, stderr = rate_regression(pts)
    else:
        slope, stderr = math.nan, math.nan
    return RateReport(lam, gamma, f, slope, stderr, tuple(pts))
