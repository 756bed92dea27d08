"""Probability distributions on an equidistant grid ``offset + step * {0..J}``.

Every distribution handled by the package (single-claim laws, their
empirical estimates, n-fold convolutions and standardized images) lives on
such a lattice. Instances are immutable; the mass array is read-only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import BadMass, BadSpec, NonGridInput, ZeroVariance

MASS_TOL = 1e-12
INPUT_MASS_TOL = 1e-9
GRID_TOL = 1e-9
# cumulative-probability slack when comparing a CDF level against alpha
LEVEL_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class LatticeDistribution:
    """Masses ``q_j`` on the points ``offset + j * step``, ``j = 0..J``."""

    offset: float
    step: float
    masses: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        q = np.array(self.masses, dtype=np.float64).ravel()
        if q.size == 0:
            raise BadMass("a lattice distribution needs at least one point")
        if not (math.isfinite(self.step) and self.step > 0):
            raise NonGridInput(f"step must be positive and finite, got {self.step}")
        if not math.isfinite(self.offset):
            raise NonGridInput("offset must be finite")
        if not np.all(np.isfinite(q)) or np.any(q < 0):
            raise BadMass("masses must be finite and nonnegative")
        total = math.fsum(q)
        if abs(total - 1.0) > MASS_TOL:
            raise BadMass(f"masses sum to {total!r}, expected 1")
        q.flags.writeable = False
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "step", float(self.step))
        object.__setattr__(self, "masses", q)

    @property
    def size(self) -> int:
        return self.masses.size

    @property
    def points(self) -> np.ndarray:
        return self.offset + self.step * np.arange(self.size)

    @property
    def upper(self) -> float:
        return self.offset + self.step * (self.size - 1)

    def cumulative(self) -> np.ndarray:
        """CDF values at the grid points, clipped to [0, 1]."""
        return np.clip(np.cumsum(self.masses), 0.0, 1.0)

    def shift(self, kappa: float) -> "LatticeDistribution":
        return LatticeDistribution(self.offset + kappa, self.step, self.masses)

    def scale(self, lam: float) -> "LatticeDistribution":
        if lam <= 0:
            raise ValueError("scale factor must be positive")
        return LatticeDistribution(self.offset * lam, self.step * lam, self.masses)

    def trimmed(self) -> "LatticeDistribution":
        """Drop zero masses at both ends of the grid."""
        nz = np.flatnonzero(self.masses)
        lo, hi = nz[0], nz[-1]
        return LatticeDistribution(self.offset + lo * self.step, self.step, self.masses[lo : hi + 1])

    def to_pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.points.tolist(), self.masses.tolist()))

    def __repr__(self) -> str:
        return f"LatticeDistribution(offset={self.offset}, step={self.step}, size={self.size})"


def normalized(offset: float, step: float, masses: Sequence[float] | np.ndarray) -> LatticeDistribution:
    """Build a distribution after rescaling ``masses`` to sum exactly to one."""
    q = np.asarray(masses, dtype=np.float64)
    total = math.fsum(q)
    if total <= 0:
        raise BadMass("total mass must be positive")
    return LatticeDistribution(offset, step, q / total)


def point_mass(c: float, step: float = 1.0) -> LatticeDistribution:
    return LatticeDistribution(c, step, np.ones(1))


def from_pmf(points_and_masses: Iterable[tuple[float, float]], step: float | None = None) -> LatticeDistribution:
    """Build a lattice distribution from ``(point, mass)`` pairs.

    Points may skip grid cells (the gaps are filled with zero mass) as long
    as every gap is an integer multiple of the grid step. The step defaults
    to the smallest gap between consecutive points. Masses are renormalized
    when their sum is within 1e-9 of one.
    """
    pairs = sorted((float(x), float(w)) for x, w in points_and_masses)
    if not pairs:
        raise BadMass("empty pmf")
    xs = np.array([x for x, _ in pairs])
    ws = np.array([w for _, w in pairs])
    if np.any(ws < 0) or not np.all(np.isfinite(ws)):
        raise BadMass("negative or non-finite mass")
    total = math.fsum(ws)
    if abs(total - 1.0) > INPUT_MASS_TOL:
        raise BadMass(f"masses sum to {total!r}, expected 1 within {INPUT_MASS_TOL}")
    gaps = np.diff(xs)
    if np.any(gaps <= 0):
        raise NonGridInput("duplicate points in pmf")
    if step is None:
        step = float(gaps.min()) if gaps.size else 1.0
    idx = (xs - xs[0]) / step
    ridx = np.rint(idx)
    if np.any(np.abs(idx - ridx) > GRID_TOL * max(1.0, float(np.abs(ridx).max()))):
        raise NonGridInput("points are not equidistant")
    q = np.zeros(int(ridx[-1]) + 1)
    np.add.at(q, ridx.astype(np.int64), ws)
    return LatticeDistribution(xs[0], step, q / total)


@dataclass(frozen=True, eq=False)
class ClaimSample:
    """Observed nonnegative claims, each a multiple of ``step``."""

    values: np.ndarray
    step: float

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=np.float64).ravel()
        if v.size == 0:
            raise BadSpec("a claim sample needs at least one value")
        if not (self.step > 0 and math.isfinite(self.step)):
            raise BadSpec("step must be positive")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise BadSpec("claims must be finite and nonnegative")
        k = v / self.step
        if np.any(np.abs(k - np.rint(k)) > GRID_TOL):
            raise NonGridInput(f"claims are not on the grid with step {self.step}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "step", float(self.step))

    @classmethod
    def from_indices(cls, indices: np.ndarray, step: float) -> "ClaimSample":
        return cls(np.asarray(indices, dtype=np.float64) * step, step)

    @property
    def indices(self) -> np.ndarray:
        return np.rint(self.values / self.step).astype(np.int64)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class MixtureSpec:
    """Claim law ``(1-p) delta_0 + p Pareto(a, b)`` discretized on ``step * N0``."""

    p: float
    a: float
    b: float
    step: float = 10.0

    def __post_init__(self) -> None:
        if not 0.0 < self.p < 1.0:
            raise BadSpec(f"p must lie in (0, 1), got {self.p}")
        if not self.a > 2.0:
            raise BadSpec(f"Pareto shape a must exceed 2, got {self.a}")
        if not self.b > 0.0:
            raise BadSpec(f"Pareto scale b must be positive, got {self.b}")
        if not self.step > 0.0:
            raise BadSpec(f"grid step must be positive, got {self.step}")

    @property
    def mean(self) -> float:
        """Mean of the continuous mixture."""
        return self.p * self.b / (self.a - 1.0)

    @property
    def variance(self) -> float:
        """Variance of the continuous mixture."""
        a, b, p = self.a, self.b, self.p
        return 2.0 * b * b * p / ((a - 1.0) * (a - 2.0)) - b * b * p * p / (a - 1.0) ** 2


def pareto_survival(x, a: float, b: float):
    """``1 - F(x)`` for the Pareto law with density ``a/b (x/b + 1)^-(a+1)``."""
    return (np.asarray(x, dtype=np.float64) / b + 1.0) ** (-a)


def pareto_cdf(x, a: float, b: float):
    return 1.0 - pareto_survival(x, a, b)


def empirical_measure(sample: ClaimSample) -> LatticeDistribution:
    counts = np.bincount(sample.indices)
    return LatticeDistribution(0.0, sample.step, counts / len(sample))


def discretize_mixture(spec: MixtureSpec, tail_eps: float = 1e-12) -> LatticeDistribution:
    """Upper-cell discretization of the Pareto mixture.

    The point ``k * step`` (k >= 1) receives ``p * P((k-1) step, k step]``;
    the mass at zero is exactly ``1 - p``. The grid stops at the first ``K``
    with ``p * (1 - F(K step)) <= tail_eps`` and the remaining tail is folded
    into the last cell.
    """
    if not 0.0 < tail_eps <= 1e-6:
        raise BadSpec(f"tail_eps must lie in (0, 1e-6], got {tail_eps}")
    p, a, b, h = spec.p, spec.a, spec.b, spec.step
    K = max(1, math.ceil(b * ((p / tail_eps) ** (1.0 / a) - 1.0) / h))
    while K > 1 and p * pareto_survival((K - 1) * h, a, b) <= tail_eps:
        K -= 1
    while p * pareto_survival(K * h, a, b) > tail_eps:
        K += 1
    surv = pareto_survival(h * np.arange(K), a, b)
    q = np.empty(K + 1)
    q[0] = 1.0 - p
    q[1:K] = p * (surv[:-1] - surv[1:])
    q[K] = p * surv[-1]
    return LatticeDistribution(0.0, h, q)


def mean(d: LatticeDistribution) -> float:
    return d.offset + d.step * math.fsum(d.masses * np.arange(d.size))


def variance(d: LatticeDistribution) -> float:
    j = np.arange(d.size)
    mj = math.fsum(d.masses * j)
    return d.step * d.step * math.fsum(d.masses * (j - mj) ** 2)


def abs_central_moment(d: LatticeDistribution, order: float) -> float:
    """``E|X - E X|^order``."""
    if order < 1:
        raise ValueError("order must be at least 1")
    j = np.arange(d.size)
    mj = math.fsum(d.masses * j)
    return d.step**order * math.fsum(d.masses * np.abs(j - mj) ** order)


def cdf(d: LatticeDistribution, x: float) -> float:
    k = math.floor((x - d.offset) / d.step + GRID_TOL)
    if k < 0:
        return 0.0
    if k >= d.size - 1:
        return 1.0
    return min(1.0, math.fsum(d.masses[: k + 1]))


def quantile_left(d: LatticeDistribution, alpha: float) -> float:
    """Smallest grid point ``x`` with ``F(x) >= alpha``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    cum = np.cumsum(d.masses)
    k = int(np.searchsorted(cum, alpha - LEVEL_TOL, side="left"))
    return d.offset + d.step * min(k, d.size - 1)


def standardize(d: LatticeDistribution) -> LatticeDistribution:
    """Affine image with mean 0 and variance 1."""
    var = variance(d)
    if var <= 0:
        raise ZeroVariance("cannot standardize a degenerate law")
    sd = math.sqrt(var)
    return LatticeDistribution((d.offset - mean(d)) / sd, d.step / sd, d.masses)
