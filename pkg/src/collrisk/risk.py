"""Law-invariant risk functionals evaluated on lattice distributions.

Five families are supported: Value at Risk, Average Value at Risk, general
convex distortion measures, the one-sided p-th moment measure and the
expectile measure. All are cash additive and positively homogeneous, so the
normal-approximation premium only needs their value at N(0, 1) (see
:mod:`collrisk.normal`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from .errors import DegenerateData, InvalidDistortion, NonConvergence
from .lattice import LatticeDistribution, quantile_left

_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class DistortionFunction:
    """Convex, nondecreasing ``g: [0, 1] -> [0, 1]`` with ``g(0) = 0``, ``g(1) = 1``.

    Build instances with the constructors :meth:`avar`, :meth:`power`,
    :meth:`one_sided_moment`, :meth:`expectile` or :meth:`table`.
    """

    kind: str
    params: tuple = ()
    knots_t: np.ndarray | None = field(default=None, repr=False)
    knots_g: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self._validate()

    @classmethod
    def avar(cls, alpha: float) -> "DistortionFunction":
        if not 0.0 < alpha < 1.0:
            raise InvalidDistortion(f"AVaR level must lie in (0, 1), got {alpha}")
        return cls("avar", (float(alpha),))

    @classmethod
    def power(cls, beta: float) -> "DistortionFunction":
        if not beta >= 1.0:
            raise InvalidDistortion(f"power distortion needs beta >= 1 for convexity, got {beta}")
        return cls("power", (float(beta),))

    @classmethod
    def one_sided_moment(cls, a: float, p: float) -> "DistortionFunction":
        """``t - a t (1 - t)^(1/p)``, the distortion induced by the one-sided moment measure."""
        return cls("osm", (float(a), float(p)))

    @classmethod
    def expectile(cls, alpha: float) -> "DistortionFunction":
        """``(1-alpha) t / (1 - alpha + (1 - t)(2 alpha - 1))``."""
        return cls("expectile", (float(alpha),))

    @classmethod
    def table(cls, knots: Sequence[tuple[float, float]]) -> "DistortionFunction":
        """Piecewise-linear interpolation through ``(t, g(t))`` knots covering 0 and 1."""
        pts = sorted((float(t), float(g)) for t, g in knots)
        t = np.array([k[0] for k in pts])
        g = np.array([k[1] for k in pts])
        return cls("table", (), t, g)

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        kind, prm = self.kind, self.params
        if kind == "avar":
            alpha = prm[0]
            return np.maximum(t - alpha, 0.0) / (1.0 - alpha)
        if kind == "power":
            return t ** prm[0]
        if kind == "osm":
            a, p = prm
            return t - a * t * np.maximum(1.0 - t, 0.0) ** (1.0 / p)
        if kind == "expectile":
            alpha = prm[0]
            return (1.0 - alpha) * t / (1.0 - alpha + (1.0 - t) * (2.0 * alpha - 1.0))
        return np.interp(t, self.knots_t, self.knots_g)

    def kinks(self) -> np.ndarray:
        """Interior points in (0, 1) where ``g`` is not differentiable."""
        if self.kind == "avar":
            return np.array([self.params[0]])
        if self.kind == "table":
            t = self.knots_t
            return t[(t > 0) & (t < 1)]
        return np.empty(0)

    def _validate(self) -> None:
        if self.kind == "table":
            t, g = self.knots_t, self.knots_g
            if t is None or t.size < 2 or t[0] != 0.0 or t[-1] != 1.0:
                raise InvalidDistortion("distortion table must have knots at t = 0 and t = 1")
            if np.any(np.diff(t) <= 0):
                raise InvalidDistortion("distortion knots must have distinct t values")
            if abs(g[0]) > _SLACK or abs(g[-1] - 1.0) > _SLACK:
                raise InvalidDistortion("distortion must satisfy g(0) = 0 and g(1) = 1")
            slopes = np.diff(g) / np.diff(t)
            if np.any(slopes < -_SLACK):
                raise InvalidDistortion("distortion must be nondecreasing")
            if np.any(np.diff(slopes) < -_SLACK):
                raise InvalidDistortion("distortion must be convex")
            return
        if self.kind not in {"avar", "power", "osm", "expectile"}:
            raise InvalidDistortion(f"unknown distortion kind {self.kind!r}")
        if self.kind == "osm":
            a, p = self.params
            if not (0.0 < a <= 1.0 and p >= 1.0):
                raise InvalidDistortion("one-sided moment distortion needs a in (0, 1] and p >= 1")
        if self.kind == "expectile" and not 0.5 <= self.params[0] < 1.0:
            raise InvalidDistortion("expectile distortion needs alpha in [1/2, 1)")
        grid = np.linspace(0.0, 1.0, 1001)
        g = self(grid)
        if abs(g[0]) > _SLACK or abs(g[-1] - 1.0) > _SLACK:
            raise InvalidDistortion("distortion must satisfy g(0) = 0 and g(1) = 1")
        if np.any(np.diff(g) < -_SLACK) or np.any(np.diff(g, 2) < -_SLACK):
            raise InvalidDistortion("distortion must be nondecreasing and convex")


@dataclass(frozen=True)
class VaR:
    alpha: float

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"VaR level must lie in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class AVaR:
    alpha: float

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"AVaR level must lie in (0, 1), got {self.alpha}")

    @property
    def distortion(self) -> DistortionFunction:
        return DistortionFunction.avar(self.alpha)


@dataclass(frozen=True)
class Distortion:
    g: DistortionFunction


@dataclass(frozen=True)
class OneSidedMoment:
    a: float
    p: float

    def __post_init__(self) -> None:
        if not 0.0 < self.a <= 1.0:
            raise ValueError(f"one-sided moment weight a must lie in (0, 1], got {self.a}")
        if not self.p >= 1.0:
            raise ValueError(f"one-sided moment order p must be >= 1, got {self.p}")


@dataclass(frozen=True)
class Expectile:
    alpha: float

    def __post_init__(self) -> None:
        if not 0.5 <= self.alpha < 1.0:
            raise ValueError(f"expectile level must lie in [1/2, 1), got {self.alpha}")


RiskMeasureSpec = Union[VaR, AVaR, Distortion, OneSidedMoment, Expectile]


def parse_measure(
    text: str,
    load_table: Callable[[str], Sequence[tuple[float, float]]] | None = None,
) -> RiskMeasureSpec:
    """Parse ``var:0.99``, ``avar:0.99``, ``osm:a,p``, ``expectile:0.9`` or ``distortion:FILE``.

    ``load_table`` turns the FILE part into ``(t, g)`` knots; the library
    itself never reads files.
    """
    kind, _, arg = text.strip().partition(":")
    kind = kind.lower()
    if not arg:
        raise ValueError(f"measure {text!r} is missing its parameter")
    if kind == "var":
        return VaR(float(arg))
    if kind == "avar":
        return AVaR(float(arg))
    if kind == "osm":
        a, p = (float(v) for v in arg.split(","))
        return OneSidedMoment(a, p)
    if kind == "expectile":
        return Expectile(float(arg))
    if kind == "distortion":
        if load_table is None:
            raise ValueError("distortion tables need a loader")
        return Distortion(DistortionFunction.table(load_table(arg)))
    raise ValueError(f"unknown risk measure {kind!r}")


def format_measure(measure: RiskMeasureSpec) -> str:
    if isinstance(measure, VaR):
        return f"var:{measure.alpha:g}"
    if isinstance(measure, AVaR):
        return f"avar:{measure.alpha:g}"
    if isinstance(measure, OneSidedMoment):
        return f"osm:{measure.a:g},{measure.p:g}"
    if isinstance(measure, Expectile):
        return f"expectile:{measure.alpha:g}"
    g = measure.g
    return f"distortion:{g.kind}" + ("(" + ",".join(f"{v:g}" for v in g.params) + ")" if g.params else "")


def _distortion_value(g: DistortionFunction, d: LatticeDistribution) -> float:
    # F is constant on [x_k, x_{k+1}); below x_0 g(F) = 0, above x_J 1 - g(F) = 0
    cum = d.cumulative()[:-1]
    gv = np.where(cum >= 1.0, 1.0, g(cum))
    return d.offset + d.step * math.fsum(1.0 - gv)


def _expectile_value(alpha: float, d: LatticeDistribution) -> float:
    nz = np.flatnonzero(d.masses)
    x = d.offset + d.step * nz
    w = d.masses[nz]
    if x.size == 1:
        return float(x[0])

    # the first-order condition is continuous, strictly decreasing and
    # piecewise linear with kinks at the support points
    vals = _foc_at_support(alpha, x, w)
    k = int(np.searchsorted(-vals, 0.0, side="left"))
    if k == 0:
        if vals[0] <= 0:
            return float(x[0])
        raise NonConvergence("expectile first-order condition has no sign change")
    if k >= x.size:
        raise NonConvergence("expectile first-order condition has no sign change")
    lo, hi = x[k - 1], x[k]
    flo, fhi = vals[k - 1], vals[k]
    if fhi == 0.0:
        return float(hi)
    return float(lo + (hi - lo) * flo / (flo - fhi))


def _foc_at_support(alpha: float, x: np.ndarray, w: np.ndarray) -> np.ndarray:
    # prefix sums give E[(x_k - X)^+] and E[(X - x_k)^+] at every support point
    cw = np.cumsum(w)
    cwx = np.cumsum(w * x)
    tot_w, tot_wx = cw[-1], cwx[-1]
    down = x * cw - cwx
    up = (tot_wx - cwx) - x * (tot_w - cw)
    return alpha * up - (1.0 - alpha) * down


def evaluate(measure: RiskMeasureSpec, d: LatticeDistribution) -> float:
    """Value of the risk functional at the lattice law ``d``."""
    if isinstance(measure, VaR):
        return quantile_left(d, measure.alpha)
    if isinstance(measure, AVaR):
        return _distortion_value(measure.distortion, d)
    if isinstance(measure, Distortion):
        return _distortion_value(measure.g, d)
    if isinstance(measure, OneSidedMoment):
        x = d.points
        m = math.fsum(d.masses * x)
        upper = math.fsum(d.masses * np.maximum(x - m, 0.0) ** measure.p)
        return m + measure.a * upper ** (1.0 / measure.p)
    if isinstance(measure, Expectile):
        return _expectile_value(measure.alpha, d)
    raise TypeError(f"not a risk measure: {measure!r}")


def induced_distortion(measure: RiskMeasureSpec, t: float) -> float:
    """``1 - rho(B)`` for a Bernoulli variable ``B`` with mean ``1 - t``."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    bern = LatticeDistribution(0.0, 1.0, np.array([t, 1.0 - t]))
    return 1.0 - evaluate(measure, bern)


def holder_exponent_probe(g_values: Mapping[float, float], n_fit: int = 20) -> tuple[float, float]:
    """Estimate ``(beta, L)`` in ``1 - g(t) <= L (1 - t)^beta`` near ``t = 1``.

    ``beta`` is the least-squares slope of ``log(1 - g)`` on ``log(1 - t)``
    over the ``n_fit`` values of ``t`` closest to 1; ``L`` is the smallest
    constant making the bound hold on the whole grid for that ``beta``.
    """
    ts = np.array(sorted(t for t in g_values if t < 1.0))
    gs = np.array([g_values[t] for t in ts])
    gap = 1.0 - gs
    ok = gap > 0
    fit = np.flatnonzero(ok)[-n_fit:]
    if fit.size < 2:
        raise DegenerateData("1 - g(t) vanishes near t = 1")
    x = np.log1p(-ts[fit])
    y = np.log(gap[fit])
    beta = float(np.polyfit(x, y, 1)[0])
    L = float(np.max(gap[ok] / (1.0 - ts[ok]) ** beta))
    return beta, L


def dyadic_grid(kmax: int = 40) -> np.ndarray:
    """``t = 1 - 2^-k`` for ``k = 1..kmax``."""
    return 1.0 - 2.0 ** -np.arange(1, kmax + 1, dtype=np.float64)
