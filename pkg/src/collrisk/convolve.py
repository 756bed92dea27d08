"""Exact n-fold convolution of lattice laws.

``convolve_n`` runs the recursion

    q^{*n}_0 = q_0^n,
    q^{*n}_j = 1/(j q_0) * sum_{l=1}^{j} ((n+1) l - j) q_l q^{*n}_{j-l},

in a compiled kernel when available (pure numpy otherwise; set
``COLLRISK_BACKEND=python`` to force it). ``convolve_direct`` is the
brute-force oracle and ``compound_binomial`` the equivalent route through the
binomial compound of the law conditioned on positive claims.

Rounding errors in the recursion grow like ``r^-j`` where ``r`` is the
smallest modulus of a root of ``P(z) = sum_k q_k z^k``. When ``q_0 >= 1/2``
there is no root inside the unit disk and the recursion is stable; this
covers every law with at least half its mass at the lowest point, such as
the claim mixtures studied here. Otherwise the law is mirrored if its top
point is heavier, the roots are checked, and laws that remain unstable go
through repeated squaring with ordinary convolutions instead.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from types import ModuleType

import numpy as np
from scipy import signal

from . import _fallback
from .errors import DegenerateP, EmptySupport, MassAtZero, TooLarge, Underflow
from .lattice import LatticeDistribution

try:
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover - exercised only without a C toolchain
    _compiled = None

BACKENDS: dict[str, ModuleType] = {"python": _fallback}
if _compiled is not None:
    BACKENDS["cython"] = _compiled


def _select_backend() -> ModuleType:
    wanted = os.environ.get("COLLRISK_BACKEND", "").strip().lower()
    if wanted:
        if wanted not in BACKENDS:
            raise ImportError(f"COLLRISK_BACKEND={wanted!r} is not available; have {sorted(BACKENDS)}")
        return BACKENDS[wanted]
    return _compiled if _compiled is not None else _fallback


_default = _select_backend()
BACKEND: str = _default.NAME

DEFAULT_TRUNC_EPS = 1e-12
DIRECT_MAX_POINTS = 10**7
# largest support for which root moduli are computed to vet the recursion
ROOT_CHECK_MAX = 256
# tolerated growth factor of rounding errors along the recursion
_MAX_AMPLIFICATION = 1e3


@dataclass(frozen=True, eq=False)
class ConvolutionResult:
    dist: LatticeDistribution
    n: int
    truncated_mass: float
    log_scale_used: bool
    method: str = "recursion"


def _kernel(backend: str | None) -> ModuleType:
    if backend is None:
        return _default
    try:
        return BACKENDS[backend]
    except KeyError:
        raise ValueError(f"unknown backend {backend!r}; have {sorted(BACKENDS)}") from None


def _recursion_masses(q: np.ndarray, n: int, trunc_eps: float, backend: str | None):
    """Recursion output rescaled to true masses, or ``None`` if it fails sanity checks."""
    f, log_scale, rescaled = _kernel(backend).binomial_recursion(q, int(n), float(trunc_eps))
    if rescaled:
        with np.errstate(divide="ignore"):
            f = np.sign(f) * np.exp(np.log(np.abs(f)) + log_scale)
    if not np.all(np.isfinite(f)) or f.min() < -1e-12:
        return None, rescaled
    # cancellation leaves rounding-level negatives in far tails
    np.clip(f, 0.0, None, out=f)
    raw = math.fsum(f)
    if not (1.0 - trunc_eps - 1e-9 <= raw <= 1.0 + 1e-9):
        return None, rescaled
    return f, rescaled


def recursion_is_stable(q: np.ndarray, n: int) -> bool:
    """Whether rounding errors of the recursion on ``q`` stay below ``1e3`` ulp-scale growth."""
    if q[0] >= 0.5:
        return True
    K = q.size - 1
    if K > ROOT_CHECK_MAX:
        return False
    try:
        with np.errstate(all="ignore"):
            roots = np.roots(q[::-1])
    except np.linalg.LinAlgError:
        return False
    if not np.all(np.isfinite(roots)):
        return False
    r = float(np.min(np.abs(roots)))
    if r == 0.0:
        return False
    return r >= 1.0 or n * K * math.log(1.0 / r) <= math.log(_MAX_AMPLIFICATION)


def _power_masses(q: np.ndarray, n: int) -> np.ndarray:
    """``q^{*n}`` by binary powering; every sum has nonnegative terms."""
    result = np.ones(1)
    base = q
    while True:
        if n & 1:
            result = np.clip(signal.convolve(result, base), 0.0, None)
        n >>= 1
        if not n:
            return result / math.fsum(result)
        base = np.clip(signal.convolve(base, base), 0.0, None)


def _cut_upper_tail(f: np.ndarray, trunc_eps: float) -> np.ndarray:
    cum = np.cumsum(f)
    k = int(np.searchsorted(cum, 1.0 - trunc_eps, side="left"))
    return f[: min(k, f.size - 1) + 1].copy()


def convolve_n(
    d: LatticeDistribution,
    n: int,
    trunc_eps: float = DEFAULT_TRUNC_EPS,
    backend: str | None = None,
) -> ConvolutionResult:
    """Law of the sum of ``n`` independent copies of ``d``.

    When ``d`` has no mass at its first grid point the law is translated so
    that its lowest support point sits at zero, and the result is translated
    back by ``n`` times that amount. With ``trunc_eps > 0`` the upper tail is
    cut once the cumulative mass reaches ``1 - trunc_eps``; the shortfall is
    reported as ``truncated_mass`` and folded into the last kept point, so
    every other mass is exactly the computed one. ``method`` records whether
    the recursion or the squaring route produced the result.
    """
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    if not 0.0 <= trunc_eps <= 1e-9:
        raise ValueError(f"trunc_eps must lie in [0, 1e-9], got {trunc_eps}")
    kernel = _kernel(backend)
    nz = np.flatnonzero(d.masses)
    if nz.size == 0:
        raise EmptySupport("distribution has no mass")
    lo, hi = int(nz[0]), int(nz[-1])
    q = np.ascontiguousarray(d.masses[lo : hi + 1])
    offset = n * (d.offset + lo * d.step)
    if q.size == 1:
        return ConvolutionResult(LatticeDistribution(offset, d.step, np.ones(1)), n, 0.0, False)
    mirrored = q[-1] > q[0]
    oriented = np.ascontiguousarray(q[::-1]) if mirrored else q
    f, rescaled, method = None, False, "recursion"
    if recursion_is_stable(oriented, n):
        # a mirrored run would truncate the lower tail, so it runs in full
        f, rescaled = _recursion_masses(oriented, n, 0.0 if mirrored else trunc_eps, kernel.NAME)
    if f is None:
        f, rescaled, method = _power_masses(q, n), False, "squaring"
    elif mirrored:
        f = np.ascontiguousarray(f[::-1])
    if trunc_eps > 0.0 and (mirrored or method == "squaring"):
        f = _cut_upper_tail(f, trunc_eps)
    deficit = 1.0 - math.fsum(f)
    if not np.all(np.isfinite(f)) or abs(deficit) > 1e-9 + trunc_eps:
        raise Underflow("convolution lost mass beyond rounding level")
    f[-1] = max(0.0, f[-1] + deficit)
    dist = LatticeDistribution(offset, d.step, f)
    return ConvolutionResult(dist, n, max(0.0, deficit), rescaled, method)


def convolve_direct(d: LatticeDistribution, n: int) -> LatticeDistribution:
    """Iterated pairwise convolution; the oracle for ``convolve_n``."""
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    out_size = n * (d.size - 1) + 1
    if out_size > DIRECT_MAX_POINTS:
        raise TooLarge(f"direct convolution would produce {out_size} points")
    acc = np.ones(1)
    for _ in range(n):
        acc = np.convolve(acc, d.masses)
    return LatticeDistribution(n * d.offset, d.step, acc / math.fsum(acc))


def compound_binomial(
    severity: LatticeDistribution,
    n: int,
    p: float,
    trunc_eps: float = 0.0,
) -> LatticeDistribution:
    """Law of ``sum_{k=1}^{N} V_k`` with ``N ~ Bin(n, p)`` and ``V_k ~ severity``.

    ``severity`` must live on ``step * {1, 2, ...}``. The Panjer recursion for
    the binomial counting law is used whenever it is numerically stable (see
    :func:`recursion_is_stable`); otherwise the binomial mixture of the
    convolution powers of ``severity`` is summed term by term, which also
    covers ``(1 - p)^n`` below the double range.
    """
    if not 0.0 < p < 1.0:
        raise DegenerateP(f"p must lie in (0, 1), got {p}")
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    k0 = round(severity.offset / severity.step)
    if abs(severity.offset - k0 * severity.step) > 1e-9 * severity.step or k0 < 0:
        raise MassAtZero("severity must live on the grid step * {0, 1, 2, ...}")
    if k0 == 0 and severity.masses[0] > 0:
        raise MassAtZero("severity has mass at zero")
    nz = np.flatnonzero(severity.masses)
    nu = np.concatenate([np.zeros(k0), severity.masses[: nz[-1] + 1]])
    stable = recursion_is_stable(np.concatenate([[1.0 - p], p * nu[1:]]), n)
    if stable and n * math.log1p(-p) >= math.log(1e-300):
        f = _panjer_binomial(nu, n, p, trunc_eps)
    else:
        f = _binomial_sum(nu, n, p)
        if trunc_eps > 0:
            f = _cut_upper_tail(f, trunc_eps)
    np.clip(f, 0.0, None, out=f)
    return LatticeDistribution(0.0, severity.step, f / math.fsum(f))


def _panjer_binomial(nu: np.ndarray, n: int, p: float, trunc_eps: float) -> np.ndarray:
    K = nu.size - 1
    # Panjer (a, b, 0) coefficients of Bin(n, p); nu[0] == 0
    a = -p / (1.0 - p)
    b = (n + 1) * p / (1.0 - p)
    ell = np.arange(1, K + 1)
    f = np.zeros(n * K + 1)
    f[0] = (1.0 - p) ** n
    cum = f[0]
    for j in range(1, f.size):
        m = min(j, K)
        terms = (a + b * ell[:m] / j) * nu[1 : m + 1] * f[j - m : j][::-1]
        f[j] = math.fsum(terms.tolist())
        cum += f[j]
        if trunc_eps > 0 and cum >= 1.0 - trunc_eps:
            return f[: j + 1]
    return f


def _binomial_sum(nu: np.ndarray, n: int, p: float) -> np.ndarray:
    K = nu.size - 1
    f = np.zeros(n * K + 1)
    power = np.ones(1)
    for k in range(n + 1):
        logw = (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
                + k * math.log(p) + (n - k) * math.log1p(-p))
        f[: power.size] += math.exp(logw) * power
        power = np.convolve(power, nu)
    return f


def total_variation(d1: LatticeDistribution, d2: LatticeDistribution) -> float:
    """Total variation distance of two laws on a common grid."""
    if abs(d1.step - d2.step) > 1e-12 * d1.step:
        raise ValueError("laws live on different grids")
    shift = (d2.offset - d1.offset) / d1.step
    k = round(shift)
    if abs(shift - k) > 1e-9:
        raise ValueError("grids are not aligned")
    lo = min(0, k)
    hi = max(d1.size, k + d2.size)
    a = np.zeros(hi - lo)
    b = np.zeros(hi - lo)
    a[-lo : -lo + d1.size] = d1.masses
    b[k - lo : k - lo + d2.size] = d2.masses
    return 0.5 * float(np.abs(a - b).sum())
