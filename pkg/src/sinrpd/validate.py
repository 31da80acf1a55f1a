"""Monte Carlo estimators and comparisons of simulation against the closed forms.

A `ComparisonReport` carries a z-score ``(estimate - analytic) / scale``
and passes when ``|z| <= threshold``. For Monte Carlo means the scale is
the standard error plus the truncation bias bound; goodness-of-fit and
correlation checks convert their statistic to an equivalent normal score;
deterministic checks scale a relative tolerance so that ``|z| = threshold``
exactly at the tolerance.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats

from . import closed_form as cf
from .errors import EmptyInput
from .model import MomentQuery, NetworkParams, PDParams
from .quadrature import QuadSpec
from .sampler import (
    PropagationBatch,
    RngStream,
    TruncationPolicy,
    sample_propagation_batch,
    tail_power_variance,
    _tail_coefficient,
)

SCOPES = ("moments", "ratios", "laplace", "dickman", "equivalence")


@dataclass(frozen=True)
class MCEstimate:
    """Replicate average with its standard error.

    ``bias_bound`` is a deterministic bound on the bias introduced by
    truncating the propagation process; it is added to the standard error
    when forming z-scores.
    """

    value: float
    std_error: float
    replicates: int
    seed: int
    bias_bound: float = 0.0

    def __post_init__(self):
        if self.std_error < 0 or self.bias_bound < 0:
            raise ValueError("std_error and bias_bound must be >= 0")
        if self.replicates < 2:
            raise ValueError("replicates must be >= 2")

    @classmethod
    def from_samples(cls, values, seed: int, bias_bound: float = 0.0) -> MCEstimate:
        x = np.asarray(values, dtype=float)
        se = float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
        return cls(float(np.mean(x)), se, int(x.size), int(seed), float(bias_bound))


class Kind(str, enum.Enum):
    MEAN = "mean"
    KS = "ks"
    CORRELATION = "correlation"
    DETERMINISTIC = "deterministic"


@dataclass(frozen=True)
class ComparisonReport:
    """One analytic-versus-numerical comparison."""

    name: str
    kind: Kind
    analytic: float
    mc: MCEstimate
    scale: float
    z_score: float
    threshold: float
    passed: bool

    def to_dict(self) -> dict:
        out = asdict(self)
        out["kind"] = self.kind.value
        return out


def _z(estimate, analytic, scale):
    diff = estimate - analytic
    if scale > 0:
        return diff / scale
    return 0.0 if diff == 0 else math.copysign(math.inf, diff)


def make_report(name: str, analytic: float, mc: MCEstimate, threshold: float = 4.0,
                kind: Kind = Kind.MEAN, scale: float | None = None) -> ComparisonReport:
    """Build a report; for means the scale defaults to ``std_error + bias_bound``."""
    if scale is None:
        scale = mc.std_error + mc.bias_bound
    z = _z(mc.value, analytic, scale)
    return ComparisonReport(name, Kind(kind), float(analytic), mc, float(scale), float(z), float(threshold),
                            bool(abs(z) <= threshold))


def deterministic_report(name: str, analytic: float, computed: float, rel_tol: float,
                         threshold: float = 4.0) -> ComparisonReport:
    """Two deterministic numbers that must agree to ``rel_tol`` relative."""
    scale = rel_tol * abs(analytic) / threshold
    if scale == 0:
        scale = rel_tol / threshold
    mc = MCEstimate(float(computed), 0.0, 2, 0)
    return make_report(name, analytic, mc, threshold, Kind.DETERMINISTIC, scale)


# --------------------------------------------------------------------------
# empirical distribution functions


class EmpiricalCDF:
    """Right-continuous step function ``F_n(x) = #{x_i <= x} / n``."""

    def __init__(self, samples):
        x = np.sort(np.asarray(samples, dtype=float).ravel())
        if x.size == 0:
            raise EmptyInput("empirical CDF of an empty sample")
        self.x = x
        self.n = x.size

    def __call__(self, q):
        out = np.searchsorted(self.x, q, side="right") / self.n
        return float(out) if np.ndim(out) == 0 else out

    def left_limit(self, q):
        out = np.searchsorted(self.x, q, side="left") / self.n
        return float(out) if np.ndim(out) == 0 else out


def empirical_cdf(samples) -> EmpiricalCDF:
    return EmpiricalCDF(samples)


def ks_distance(ecdf: EmpiricalCDF, cdf: Callable) -> float:
    """``sup_x |F_n(x) - F(x)|`` for continuous ``F``, checked on both sides of every jump."""
    jumps = np.unique(ecdf.x)
    f = np.asarray(cdf(jumps), dtype=float)
    return float(max(np.max(np.abs(ecdf(jumps) - f)), np.max(np.abs(ecdf.left_limit(jumps) - f))))


def ks_two_sample(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov distance."""
    if len(a) == 0 or len(b) == 0:
        raise EmptyInput("two-sample KS distance needs non-empty samples")
    return float(stats.ks_2samp(a, b).statistic)


def ks_distance_2d(points, cdf2: Callable, grid: int = 100) -> float:
    """Largest gap between the empirical and an analytic bivariate CDF.

    Both are evaluated on a ``grid x grid`` lattice placed at the marginal
    quantiles of the sample.
    """
    p = np.asarray(points, dtype=float)
    if p.ndim != 2 or p.shape[1] != 2 or p.shape[0] == 0:
        raise EmptyInput("need a non-empty (m, 2) array of points")
    probs = (np.arange(1, grid + 1) - 0.5) / grid
    gx, gy = np.quantile(p[:, 0], probs), np.quantile(p[:, 1], probs)
    ix = np.searchsorted(gx, p[:, 0], side="left")
    iy = np.searchsorted(gy, p[:, 1], side="left")
    counts = np.zeros((grid + 1, grid + 1))
    np.add.at(counts, (ix, iy), 1.0)
    emp = counts.cumsum(axis=0).cumsum(axis=1)[:grid, :grid] / p.shape[0]
    ana = np.array([[cdf2(x, y) for y in gy] for x in gx])
    return float(np.max(np.abs(emp - ana)))


def ks_z_score(ecdf: EmpiricalCDF, cdf: Callable) -> tuple[float, float]:
    """KS distance and the normal score ``Phi^-1(1 - p/2)`` of its p-value."""
    res = stats.kstest(ecdf.x, cdf)
    p = max(float(res.pvalue), 1e-300)
    return float(res.statistic), float(stats.norm.isf(p / 2.0))


# --------------------------------------------------------------------------
# estimators


def _batch(params: NetworkParams, replicates: int, rng: RngStream, keep: int,
           policy: TruncationPolicy | None, workers: Optional[int]) -> PropagationBatch:
    if replicates < 100:
        raise ValueError("replicates must be >= 100")
    return sample_propagation_batch(params, policy, replicates, rng.seed, keep=keep,
                                    substream=rng.substream, workers=workers)


def _ordered_tuple_counts(z: np.ndarray, thresholds: Sequence[float]) -> np.ndarray:
    """Number of ordered tuples of distinct points with ``z_(j_k) > t_k``, per row.

    The sets ``{z > t}`` are nested, so assigning points to the largest
    threshold first gives ``prod_k (c_(k) - (k - 1))`` with ``c_(k)`` the
    count above the ``k``-th largest threshold.
    """
    t = np.sort(np.asarray(thresholds, dtype=float))[::-1]
    zz = np.nan_to_num(z, nan=0.0)
    out = np.ones(z.shape[0])
    for k, tk in enumerate(t):
        c = (zz > tk).sum(axis=1)
        out *= np.maximum(c - k, 0)
    return out


def moment_keep(thresholds: Sequence[float]) -> int:
    """Stored values needed to count every point above the smallest threshold."""
    return int(math.ceil(1.0 / min(thresholds)))


def empirical_moment_measure(params: NetworkParams, query: MomentQuery, replicates: int, rng: RngStream,
                             policy: TruncationPolicy | None = None, workers: Optional[int] = None,
                             batch: PropagationBatch | None = None) -> MCEstimate:
    """Replicate average of the number of ordered distinct ``n``-tuples above the thresholds."""
    t = query.stinr_thresholds()
    keep = moment_keep(t)
    if batch is None:
        batch = _batch(params, replicates, rng, keep, policy, workers)
    elif batch.inv_top.shape[1] < min(keep, batch.policy.max_points):
        raise ValueError(f"batch keeps {batch.inv_top.shape[1]} values, {keep} needed")
    counts = _ordered_tuple_counts(batch.z_top(params.W), t)
    bias = batch.policy.rel_tail_tol * float(np.mean(counts))
    return MCEstimate.from_samples(counts, rng.seed, bias)


class LaplaceOf(str, enum.Enum):
    INTERFERENCE = "interference"
    INV_STIR = "inv_stir_i"


def mc_laplace(transform_of: LaplaceOf | str, params: NetworkParams, gamma_or_z: float, i: int | None = None,
               replicates: int = 100_000, rng: RngStream | None = None, policy: TruncationPolicy | None = None,
               workers: Optional[int] = None, batch: PropagationBatch | None = None) -> MCEstimate:
    """Replicate average of ``exp(-z I)`` or ``exp(-gamma / Z'_(i))``.

    The bias bound is ``rel_tail_tol * |estimate|`` plus, for the
    interference transform, the second-order effect of replacing the random
    tail power by its mean (``z**2 / 2 * E[exp(-z I) Var(tail)]``).
    """
    kind = LaplaceOf(transform_of)
    rng = rng or RngStream(1)
    g = float(gamma_or_z)
    if g < 0:
        raise ValueError("argument must be >= 0")
    if kind is LaplaceOf.INV_STIR and (i is None or i < 1):
        raise ValueError("inv_stir_i needs an index i >= 1")
    if g == 0:
        return MCEstimate(1.0, 0.0, max(replicates, 2), rng.seed)
    keep = i if kind is LaplaceOf.INV_STIR else 1
    if batch is None:
        policy = policy or TruncationPolicy()
        if policy.min_points < keep:
            policy = replace(policy, min_points=min(keep, policy.max_points))
        batch = _batch(params, replicates, rng, keep, policy, workers)
    p = batch.params
    if kind is LaplaceOf.INTERFERENCE:
        vals = np.exp(-g * batch.total_power)
        alpha = p.alpha
        T = (batch.tail_correction / _tail_coefficient(p.a, p.beta)) ** (1.0 / (alpha - 1.0))
        second = 0.5 * g * g * float(np.mean(vals * tail_power_variance(p.a, p.beta, T)))
    else:
        vals = np.exp(-g * (params.W + batch.total_power) / batch.inv_top[:, i - 1])
        second = 0.0
    bias = batch.policy.rel_tail_tol * float(np.mean(vals)) + second
    return MCEstimate.from_samples(vals, rng.seed, bias)


def _pit_correlation_z(u, v):
    rho = float(np.corrcoef(u, v)[0, 1])
    return rho, rho * math.sqrt(len(u))


# --------------------------------------------------------------------------
# comparison suite


@dataclass(frozen=True)
class SuiteConfig:
    """Inputs of `run_comparison_suite`; ``workers`` does not affect results and is not serialized."""

    beta: float = 4.0
    a: float = 1.0
    replicates: int = 100_000
    seed: int = 1
    threshold: float = 4.0
    max_points: int = 10_000
    rel_tail_tol: float = 1e-8
    noise: float = 1.0
    moment_queries: tuple = ((0.2,), (0.5,), (0.2, 0.1), (0.3, 0.2), (0.2, 0.15, 0.1))
    ratio_count: int = 5
    laplace_z: tuple = (0.5, 1.0, 2.0)
    laplace_i: tuple = (1, 2)
    laplace_gamma: tuple = (0.5, 1.0, 2.0)
    dickman_s: tuple = (1.2, 1.5, 2.0, 2.5)
    equivalence_betas: tuple = (3.0, 4.0)
    equivalence_noise: tuple = (0.0, 1.0)
    equivalence_grid: tuple = (
        ((0.1,), (0.3,), (0.5,), (0.7,), (0.9,)),
        ((0.1, 0.1), (0.2, 0.1), (0.3, 0.2), (0.4, 0.3), (0.05, 0.6)),
    )
    equivalence_rel_tol: float = 1e-4
    workers: Optional[int] = field(default=None, compare=False)

    def __post_init__(self):
        if self.replicates < 100:
            raise ValueError("replicates must be >= 100")
        NetworkParams.from_a(self.a, self.beta)

    def params(self, W: float = 0.0) -> NetworkParams:
        return NetworkParams.from_a(self.a, self.beta, W)

    def keep(self) -> int:
        """Leading values each replicate must store for the suite's statistics."""
        return max(self.ratio_count + 1, max(self.laplace_i),
                   max(moment_keep(q) for q in self.moment_queries))

    def policy(self) -> TruncationPolicy:
        return TruncationPolicy(self.max_points, self.rel_tail_tol, min(self.keep(), self.max_points))

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("workers")
        return out


def _suite_batch(config: SuiteConfig) -> PropagationBatch:
    return sample_propagation_batch(config.params(), config.policy(), config.replicates, config.seed,
                                    keep=config.keep(), workers=config.workers)


def _fmt(values):
    return "_".join(f"{v:g}" for v in values)


def _moment_reports(config, batch, spec):
    out = []
    for W in (0.0, config.noise):
        params = config.params(W)
        for t in config.moment_queries:
            q = MomentQuery(len(t), t)
            analytic = cf.moment_measure(params, q, spec)
            mc = empirical_moment_measure(params, q, config.replicates, RngStream(config.seed), batch=batch)
            out.append(make_report(f"moment_measure_n{q.n}_W{W:g}_t{_fmt(t)}", analytic, mc, config.threshold))
    return out


def _ratio_reports(config, batch):
    out = []
    z = batch.z_top(0.0)
    alpha = 2.0 / config.beta
    k = config.ratio_count
    ratios = z[:, 1:k + 1] / z[:, :k]
    pit = np.empty_like(ratios)
    for i in range(1, k + 1):
        r = ratios[:, i - 1]
        pit[:, i - 1] = r ** (i * alpha)
        ecdf = EmpiricalCDF(r)
        d, zscore = ks_z_score(ecdf, lambda x, i=i: cf.successive_ratio_cdf(config.beta, i, x))
        mc = MCEstimate(d, 0.0, r.size, config.seed)
        out.append(ComparisonReport(f"successive_ratio_R{i}_ks", Kind.KS, 0.0, mc, d / zscore if zscore else 0.0,
                                    zscore, config.threshold, abs(zscore) <= config.threshold))
    for i, j in itertools.combinations(range(1, k + 1), 2):
        rho, zscore = _pit_correlation_z(pit[:, i - 1], pit[:, j - 1])
        mc = MCEstimate(rho, 1.0 / math.sqrt(pit.shape[0]), pit.shape[0], config.seed)
        out.append(make_report(f"successive_ratio_R{i}_R{j}_independence", 0.0, mc, config.threshold,
                               Kind.CORRELATION))
    return out


def _laplace_reports(config, batch, spec):
    out = []
    params = config.params()
    rng = RngStream(config.seed)
    for zz in config.laplace_z:
        analytic = cf.interference_laplace(config.a, config.beta, zz)
        mc = mc_laplace(LaplaceOf.INTERFERENCE, params, zz, rng=rng, batch=batch)
        out.append(make_report(f"interference_laplace_z{zz:g}", analytic, mc, config.threshold))
    for i in config.laplace_i:
        for g in config.laplace_gamma:
            analytic = cf.inv_stir_laplace(config.beta, i, g, spec)
            mc = mc_laplace(LaplaceOf.INV_STIR, params, g, i, rng=rng, batch=batch)
            out.append(make_report(f"inverse_stir_laplace_i{i}_gamma{g:g}", analytic, mc, config.threshold))
    return out


def _dickman_reports(config, batch, spec):
    out = []
    z1 = batch.z_top(0.0)[:, 0]
    pd = PDParams(2.0 / config.beta, 0.0)
    for s in config.dickman_s:
        analytic = cf.dickman(pd, s, spec)
        ind = (z1 < 1.0 / s).astype(float)
        mc = MCEstimate.from_samples(ind, config.seed, config.rel_tail_tol * float(ind.mean()))
        out.append(make_report(f"dickman_largest_stir_s{s:g}", analytic, mc, config.threshold))
    return out


def _equivalence_reports(config, spec):
    out = []
    for beta in config.equivalence_betas:
        for W in config.equivalence_noise:
            params = NetworkParams.from_a(config.a, beta, W)
            for grid in config.equivalence_grid:
                for t in grid:
                    q = MomentQuery(len(t), t)
                    measure = cf.moment_measure(params, q, spec)
                    integrated = cf.integrated_density(params, q, spec)
                    out.append(deterministic_report(
                        f"measure_vs_integrated_density_n{q.n}_beta{beta:g}_W{W:g}_t{_fmt(t)}",
                        measure, integrated, config.equivalence_rel_tol, config.threshold))
    return out


def run_comparison_suite(scope: str, config: SuiteConfig | None = None,
                         spec: QuadSpec | None = None) -> list[ComparisonReport]:
    """Run the comparisons of ``scope`` (one of `SCOPES` or ``"all"``) in a fixed order.

    A comparison that raises is reported as failed (z = inf) rather than
    aborting the suite.
    """
    config = config or SuiteConfig()
    scopes = SCOPES if scope == "all" else (scope,)
    for s in scopes:
        if s not in SCOPES:
            raise ValueError(f"unknown scope {s!r}; expected one of {SCOPES + ('all',)}")
    batch = None
    reports = []
    for s in scopes:
        if s != "equivalence" and batch is None:
            batch = _suite_batch(config)
        try:
            if s == "moments":
                reports += _moment_reports(config, batch, spec)
            elif s == "ratios":
                reports += _ratio_reports(config, batch)
            elif s == "laplace":
                reports += _laplace_reports(config, batch, spec)
            elif s == "dickman":
                reports += _dickman_reports(config, batch, spec)
            else:
                reports += _equivalence_reports(config, spec)
        except (ValueError, ArithmeticError, RuntimeError) as exc:
            mc = MCEstimate(math.nan, 0.0, 2, config.seed)
            reports.append(ComparisonReport(f"{s}_error: {exc}", Kind.DETERMINISTIC, math.nan, mc, 0.0,
                                            math.inf, config.threshold, False))
    return reports
