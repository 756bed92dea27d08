"""Seeded Monte-Carlo studies of the two premium estimators.

Every function here is pure: it takes an :class:`ExperimentConfig` and
returns :class:`Table` objects; writing files is left to :mod:`collrisk.cli`.

Randomness comes from counter-based Philox streams. Path ``i`` always uses
the stream with spawn key ``(i,)``, and its claims are drawn as one nested
sequence, so the sample for a collective of size ``n`` is the prefix of length
``u_n`` of the path's stream. Results therefore do not depend on the number
of worker threads or on scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

from .convolve import DEFAULT_TRUNC_EPS, convolve_n
from .diagnostics import convergence_curve
from .estimate import PremiumReport, claims_for, confidence_interval, normal_approx_premium, plugin_premium
from .lattice import ClaimSample, LatticeDistribution, MixtureSpec, discretize_mixture
from .normal import risk_of_std_normal, std_normal_pdf
from .risk import RiskMeasureSpec, VaR, evaluate

T = TypeVar("T")
R = TypeVar("R")

FIG1_PAIRS = ((2.1, 11.0), (3.0, 20.0), (6.0, 50.0), (10.0, 90.0))
FIG1_SIZES = (100, 150, 200)
FIG2_SIZES = tuple(range(20, 201, 20))
# spawn-key prefix of the streams used by the Monte-Carlo reference mode
_REFERENCE_STREAM = 2**31


@dataclass(frozen=True)
class ExperimentConfig:
    mixture: MixtureSpec = MixtureSpec(0.1, 3.0, 20.0, 10.0)
    measure: RiskMeasureSpec = VaR(0.99)
    n_grid: tuple[int, ...] = FIG2_SIZES
    mc_paths: int = 100
    mc_paths_reference: int = 100_000
    ratio_c: float = 1.0
    seed: int = 20240101
    ci_level: float = 0.95
    tail_eps: float = 1e-12
    trunc_eps: float = DEFAULT_TRUNC_EPS
    reference: str = "exact"
    jobs: int = 1
    r: float = 0.4
    lam: float = 3.0
    refine: int = 8
    pairs: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self) -> None:
        grid = tuple(int(n) for n in self.n_grid)
        if not grid or any(n < 1 for n in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("n_grid must be a nonempty strictly increasing list of positive integers")
        object.__setattr__(self, "n_grid", grid)
        if self.mc_paths < 1 or self.mc_paths_reference < 1:
            raise ValueError("Monte-Carlo path counts must be positive")
        if not self.ratio_c > 0:
            raise ValueError("ratio_c must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if not 0.0 < self.ci_level < 1.0:
            raise ValueError("ci_level must lie in (0, 1)")
        if self.jobs < 1:
            raise ValueError("jobs must be positive")
        if not (self.reference == "exact" or self.reference.startswith("mc:")):
            raise ValueError("reference must be 'exact' or 'mc:K'")


@dataclass
class Table:
    name: str
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)

    def column(self, name: str) -> list:
        k = self.columns.index(name)
        return [row[k] for row in self.rows]


def path_rng(seed: int, stream: int | Sequence[int]) -> np.random.Generator:
    key = (stream,) if isinstance(stream, int) else tuple(stream)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def sample_mixture(spec: MixtureSpec, count: int, rng: np.random.Generator) -> ClaimSample:
    """Draw ``count`` claims from the mixture, Pareto draws rounded up to the grid.

    One pair of uniforms per claim, drawn row by row, so shorter samples are
    prefixes of longer ones from the same stream.
    """
    if count < 1:
        raise ValueError("count must be positive")
    u = rng.random((count, 2))
    pareto = spec.b * ((1.0 - u[:, 1]) ** (-1.0 / spec.a) - 1.0)
    k = np.maximum(np.ceil(pareto / spec.step), 1.0)
    k[u[:, 0] >= spec.p] = 0.0
    return ClaimSample.from_indices(k, spec.step)


def parallel_map(fn: Callable[[T], R], items: Iterable[T], jobs: int = 1) -> list[R]:
    """Order-preserving map, threaded when ``jobs > 1``."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def exact_aggregate(spec: MixtureSpec, n: int, tail_eps: float, trunc_eps: float) -> LatticeDistribution:
    return convolve_n(discretize_mixture(spec, tail_eps), n, trunc_eps).dist


def mc_aggregate(spec: MixtureSpec, n: int, runs: int, seed: int, chunk: int = 10_000) -> LatticeDistribution:
    """Empirical law of ``runs`` simulated aggregate claims ``S_n``."""
    rng = path_rng(seed, (_REFERENCE_STREAM, n))
    totals = []
    done = 0
    while done < runs:
        m = min(chunk, runs - done)
        idx = sample_mixture(spec, m * n, rng).indices.reshape(m, n)
        totals.append(idx.sum(axis=1))
        done += m
    counts = np.bincount(np.concatenate(totals))
    return LatticeDistribution(0.0, spec.step, counts / runs)


def reference_premiums(config: ExperimentConfig, spec: MixtureSpec | None = None) -> dict[int, float]:
    """``R(mu^{*n}) / n`` for every ``n`` in the grid, exact unless ``reference = mc:K``."""
    spec = spec or config.mixture
    if config.reference == "exact":
        base = discretize_mixture(spec, config.tail_eps)

        def one(n):
            return evaluate(config.measure, convolve_n(base, n, config.trunc_eps).dist) / n
    else:
        runs = int(config.reference.split(":", 1)[1])

        def one(n):
            return evaluate(config.measure, mc_aggregate(spec, n, runs, config.seed)) / n

    values = parallel_map(one, config.n_grid, config.jobs)
    return dict(zip(config.n_grid, values))


@dataclass(frozen=True)
class PathEstimates:
    """Per-n premiums of one Monte-Carlo path: ``(normal, plugin, s_hat)``."""

    path: int
    normal: tuple[float, ...]
    plugin: tuple[float, ...]
    s_hat: tuple[float, ...]


def estimate_path(config: ExperimentConfig, path: int, spec: MixtureSpec | None = None,
                  normal_constant: float | None = None) -> PathEstimates:
    spec = spec or config.mixture
    r0 = risk_of_std_normal(config.measure).value if normal_constant is None else normal_constant
    sizes = [claims_for(n, config.ratio_c) for n in config.n_grid]
    full = sample_mixture(spec, max(sizes), path_rng(config.seed, path))
    normal, plugin, s_hat = [], [], []
    for n, u in zip(config.n_grid, sizes):
        sample = ClaimSample(full.values[:u], spec.step)
        rep_n = normal_approx_premium(sample, n, config.measure, normal_constant=r0)
        rep_p = plugin_premium(sample, n, config.measure, config.trunc_eps, normal_constant=r0)
        normal.append(rep_n.premium_per_risk)
        plugin.append(rep_p.premium_per_risk)
        s_hat.append(rep_n.s_hat)
    return PathEstimates(path, tuple(normal), tuple(plugin), tuple(s_hat))


def simulate_paths(config: ExperimentConfig, spec: MixtureSpec | None = None) -> list[PathEstimates]:
    r0 = risk_of_std_normal(config.measure).value
    return parallel_map(lambda i: estimate_path(config, i, spec, r0), range(config.mc_paths), config.jobs)


def _fig_pairs(config: ExperimentConfig, default: Sequence[tuple[float, float]]):
    pairs = config.pairs if config.pairs is not None else default
    return [MixtureSpec(config.mixture.p, a, b, config.mixture.step) for a, b in pairs]


def _tag(spec: MixtureSpec) -> str:
    return f"a{spec.a:g}_b{spec.b:g}"


def run_fig1(config: ExperimentConfig, sizes: Sequence[int] | None = None) -> list[Table]:
    """Exact aggregate pmf next to the matching normal density, one table per panel."""
    sizes = tuple(sizes) if sizes is not None else FIG1_SIZES
    tables = []
    for spec in _fig_pairs(config, FIG1_PAIRS):
        base = discretize_mixture(spec, config.tail_eps)
        aggs = parallel_map(lambda n: convolve_n(base, n, config.trunc_eps).dist, sizes, config.jobs)
        for n, agg in zip(sizes, aggs):
            mu, sd = n * spec.mean, math.sqrt(n * spec.variance)
            x = agg.points
            dens = std_normal_pdf((x - mu) / sd) / sd
            rows = list(zip(x.tolist(), agg.masses.tolist(), dens.tolist()))
            tables.append(Table(f"fig1_{_tag(spec)}_n{n}", ("x", "pmf", "normal_density"), rows))
    return tables


def run_fig2(config: ExperimentConfig) -> list[Table]:
    """Exact reference premium against Monte-Carlo averages of both estimators."""
    tables = []
    for spec in _fig_pairs(config, [(config.mixture.a, config.mixture.b)]):
        ref = reference_premiums(config, spec)
        paths = simulate_paths(config, spec)
        rows = []
        for k, n in enumerate(config.n_grid):
            normal_avg = math.fsum(p.normal[k] for p in paths) / len(paths)
            plugin_avg = math.fsum(p.plugin[k] for p in paths) / len(paths)
            rows.append((n, ref[n], normal_avg, plugin_avg, normal_avg - ref[n], plugin_avg - ref[n]))
        cols = ("n", "reference", "normal_avg", "plugin_avg", "normal_bias", "plugin_bias")
        tables.append(Table(f"fig2_{_tag(spec)}", cols, rows))
    return tables


def run_errors(config: ExperimentConfig) -> Table:
    """Mean absolute error of both estimators along the grid."""
    ref = reference_premiums(config)
    paths = simulate_paths(config)
    rows = []
    for k, n in enumerate(config.n_grid):
        mae_n = math.fsum(abs(p.normal[k] - ref[n]) for p in paths) / len(paths)
        mae_p = math.fsum(abs(p.plugin[k] - ref[n]) for p in paths) / len(paths)
        rows.append((n, ref[n], mae_n, mae_p))
    return Table(f"errors_{_tag(config.mixture)}", ("n", "reference", "normal_mae", "plugin_mae"), rows)


def run_coverage(config: ExperimentConfig) -> Table:
    """Share of paths whose asymptotic interval contains the reference premium."""
    ref = reference_premiums(config)
    paths = simulate_paths(config)
    rows = []
    for k, n in enumerate(config.n_grid):
        u = claims_for(n, config.ratio_c)
        for method in ("normal_approx", "plugin"):
            hits = 0
            for p in paths:
                value = p.normal[k] if method == "normal_approx" else p.plugin[k]
                rep = PremiumReport(method, n, u, value, math.nan, p.s_hat[k], math.nan)
                low, high = confidence_interval(rep, config.ci_level)
                hits += low <= ref[n] <= high
            rows.append((n, method, hits / len(paths)))
    return Table(f"coverage_{_tag(config.mixture)}", ("n", "method", "coverage"), rows)


def run_mz_check(config: ExperimentConfig) -> Table:
    """``n^r |premium - reference|`` along one nested sample path (path 0)."""
    ref = reference_premiums(config)
    est = estimate_path(config, 0)
    rows = []
    for k, n in enumerate(config.n_grid):
        scale = n**config.r
        rows.append((n, scale * abs(est.normal[k] - ref[n]), scale * abs(est.plugin[k] - ref[n])))
    return Table(f"mz_{_tag(config.mixture)}_r{config.r:g}", ("n", "normal_scaled_error", "plugin_scaled_error"), rows)


def run_rates(config: ExperimentConfig) -> Table:
    """Nonuniform Kolmogorov distances of the standardized exact aggregates."""
    rep = convergence_curve(config.mixture, config.lam, config.n_grid, config.tail_eps, config.refine,
                            config.trunc_eps)
    rows = [(n, dist, rep.gamma, rep.f_factor, rep.slope_est) for n, dist in rep.points]
    return Table(f"rates_{_tag(config.mixture)}_lambda{config.lam:g}", ("n", "distance", "gamma", "f", "slope"), rows)
