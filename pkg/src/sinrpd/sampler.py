"""Random generation of the propagation process, STINR sequences and PD(alpha, theta).

Every random object is drawn from an `RngStream`, a (seed, stream_id,
substream) triple mapped onto an independent PCG64 stream through numpy's
``SeedSequence`` spawn keys. Replicate ``r`` of a batch always uses
``stream_id = r``, so batch results do not depend on how replicates are
split across workers.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import gamma as gamma_fn

from .errors import EmptySample, InsufficientPoints, RangeError, WindowTooSmall
from .model import NetworkParams, PDParams, PropagationSample, RatioSample, RatioScale

WORKERS_ENV = "SINRPD_WORKERS"
_BATCH_CHUNK = 500

# substream ids, so that different random objects of one replicate never share draws
SUB_PROPAGATION = 0
SUB_ACCESS = 1
SUB_PD = 2
SUB_PLANAR = 3


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0
    substream: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id", "substream"):
            value = getattr(self, name)
            if int(value) != value or not (0 <= value < 2**64):
                raise ValueError(f"{name} must be an unsigned 64-bit integer")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id), int(self.substream)))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, substream: int) -> RngStream:
        return RngStream(self.seed, self.stream_id, substream)


@dataclass(frozen=True)
class TruncationPolicy:
    """When to stop generating propagation points.

    Generation stops once the expected received power of the points not
    yet generated falls below ``rel_tail_tol`` times the power accumulated
    so far, or after ``max_points`` points. ``min_points`` keeps at least
    that many points even when the tail test passes earlier (a single very
    close station can satisfy it after a handful of points).
    """

    max_points: int = 10_000
    rel_tail_tol: float = 1e-8
    min_points: int = 0

    def __post_init__(self):
        if self.max_points < 10:
            raise ValueError("max_points must be >= 10")
        if not (0.0 < self.rel_tail_tol < 1.0):
            raise ValueError("rel_tail_tol must lie in (0, 1)")
        if not (0 <= self.min_points <= self.max_points):
            raise ValueError("min_points must lie in [0, max_points]")


@dataclass(frozen=True)
class FadingLaw:
    """Distribution of the propagation mark ``S`` used by the planar simulator.

    ``kind`` is ``"constant"`` (S = 1), ``"exponential"`` (unit mean) or
    ``"lognormal"`` (S = exp(sigma * N(0, 1))).
    """

    kind: str = "constant"
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "exponential", "lognormal"):
            raise ValueError(f"unknown fading law {self.kind!r}")
        if self.kind == "lognormal" and not self.sigma > 0:
            raise ValueError("lognormal sigma must be > 0")

    def moment(self, p: float) -> float:
        """``E[S**p]``."""
        if self.kind == "constant":
            return 1.0
        if self.kind == "exponential":
            return float(gamma_fn(1.0 + p))
        return math.exp(0.5 * (p * self.sigma) ** 2)

    def sample(self, gen: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "constant":
            return np.ones(size)
        if self.kind == "exponential":
            return gen.standard_exponential(size)
        return np.exp(self.sigma * gen.standard_normal(size))

    def network_params(self, lam: float, beta: float, K: float = 1.0, W: float = 0.0) -> NetworkParams:
        return NetworkParams(lam=lam, beta=beta, K=K, W=W, fading_moment=self.moment(2.0 / beta))


def default_workers() -> int:
    """Worker count from the ``SINRPD_WORKERS`` environment variable (default 1)."""
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# --------------------------------------------------------------------------
# Poisson-Dirichlet by stick breaking


class PDSample(NamedTuple):
    tilde_v: np.ndarray  # stick order, i.e. size-biased order
    v: np.ndarray  # decreasing order


def _stick_breaking(params: PDParams, count: int, gen: np.random.Generator) -> np.ndarray:
    b = params.theta + params.alpha * np.arange(1, count + 1)
    u = gen.beta(1.0 - params.alpha, b)
    remaining = np.concatenate(([1.0], np.cumprod(1.0 - u)[:-1]))
    return remaining * u


def sample_pd_stick_breaking(params: PDParams, count: int, rng: RngStream) -> PDSample:
    """First ``count`` stick-breaking weights of PD(alpha, theta).

    ``U_i ~ Beta(1 - alpha, theta + i*alpha)`` independently and
    ``V~_i = (1 - U_1)...(1 - U_{i-1}) U_i``.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    tilde = _stick_breaking(params, count, rng.generator())
    return PDSample(tilde, np.sort(tilde)[::-1])


def _pd_chunk(args):
    alpha, theta, count, keep, seed, substream, start, stop = args
    params = PDParams(alpha, theta)
    out = np.empty((stop - start, keep))
    for r in range(start, stop):
        tilde = _stick_breaking(params, count, RngStream(seed, r, substream).generator())
        out[r - start] = np.sort(tilde)[::-1][:keep]
    return out


def sample_pd_batch(params: PDParams, count: int, replicates: int, seed: int, keep: int = 2,
                    substream: int = 0, workers: Optional[int] = None) -> np.ndarray:
    """Largest ``keep`` values of ``replicates`` independent stick-breaking draws.

    Row ``r`` equals ``sample_pd_stick_breaking(params, count,
    RngStream(seed, r, substream)).v[:keep]``.
    """
    if keep > count:
        raise ValueError("keep must not exceed count")
    jobs = [(params.alpha, params.theta, count, keep, seed, substream, s, min(s + _BATCH_CHUNK, replicates))
            for s in range(0, replicates, _BATCH_CHUNK)]
    return np.concatenate(_map(_pd_chunk, jobs, workers), axis=0)


# --------------------------------------------------------------------------
# propagation process from Poisson arrival epochs


def _tail_coefficient(a, beta):
    alpha = 2.0 / beta
    return (2.0 * a / beta) / (1.0 - alpha)


def expected_tail_power(a: float, beta: float, T: float) -> float:
    """Expected received power ``E[sum_{Y > T} 1/Y]`` of the points beyond ``T``."""
    alpha = 2.0 / beta
    return _tail_coefficient(a, beta) * T ** (alpha - 1.0)


def tail_power_variance(a: float, beta: float, T: float) -> float:
    """Variance of ``sum_{Y > T} 1/Y`` (Campbell's formula)."""
    alpha = 2.0 / beta
    return (2.0 * a / beta) * T ** (alpha - 2.0) / (2.0 - alpha)


def _propagation_rows(epochs, a, beta, rel_tail_tol, min_points=0):
    """Shared core of the single and batched samplers.

    Returns ``(inv_y, n_points, tail, total, truncated)`` for a 2-D array of
    increasing arrival epochs, one replicate per row. The stopping test is
    monotone in ``k`` (the expected tail shrinks while the partial sum
    grows), so rows that fail it at the last column are truncated and need
    no per-column work.
    """
    inv_y = (epochs / a) ** (-beta / 2.0)
    coef = _tail_coefficient(a, beta)
    N = epochs.shape[1]
    n_points = np.full(epochs.shape[0], N)
    total_stored = inv_y.sum(axis=1)
    last_tail = coef * (epochs[:, -1] / a) * inv_y[:, -1]
    early = np.flatnonzero(last_tail < rel_tail_tol * total_stored)
    if early.size:
        partial = np.cumsum(inv_y[early], axis=1)
        tails = coef * (epochs[early] / a) * inv_y[early]
        first = (tails < rel_tail_tol * partial).argmax(axis=1) + 1
        n_points[early] = np.maximum(first, min_points)
    rows = np.arange(epochs.shape[0])
    k = n_points - 1
    tail = coef * (epochs[rows, k] / a) * inv_y[rows, k]
    stored = total_stored.copy()
    for r in early:
        stored[r] = inv_y[r, : n_points[r]].sum()
    truncated = np.ones(epochs.shape[0], dtype=bool)
    truncated[early] = False
    return inv_y, n_points, tail, stored + tail, truncated


def sample_propagation_process(params: NetworkParams, policy: TruncationPolicy | None = None,
                               rng: RngStream | None = None, epochs=None) -> PropagationSample:
    """Propagation values ``Y_(i) = (Gamma_i / a)**(beta/2)`` from unit-rate arrival epochs.

    The ``Gamma_i`` are cumulative sums of standard exponentials drawn from
    ``rng``; ``epochs`` may be passed instead to force them. The expected
    power of the points beyond the last stored one is added to
    ``total_power`` and recorded as ``tail_correction``; ``truncated`` is set
    when ``max_points`` was reached before the tail tolerance.
    """
    policy = policy or TruncationPolicy()
    if epochs is None:
        if rng is None:
            raise ValueError("either rng or epochs is required")
        epochs = np.cumsum(rng.generator().standard_exponential(policy.max_points))
    else:
        epochs = np.asarray(epochs, dtype=float)[: policy.max_points]
        if epochs.size == 0 or np.any(np.diff(epochs) <= 0) or epochs[0] <= 0:
            raise ValueError("forced epochs must be positive and strictly increasing")
    inv_y, n, tail, total, truncated = _propagation_rows(epochs[None, :], params.a, params.beta,
                                                         policy.rel_tail_tol, policy.min_points)
    k = int(n[0])
    y = (epochs[:k] / params.a) ** (params.beta / 2.0)
    return PropagationSample(y, float(total[0]), float(tail[0]), bool(truncated[0]))


@dataclass(frozen=True)
class PropagationBatch:
    """Per-replicate summaries of many propagation samples.

    ``inv_top[r, j]`` is ``1/Y_(j+1)`` of replicate ``r`` (NaN past the stored
    points). ``limit_core`` holds the averaged ``i * (1/Y_(i))**(2/beta)`` over
    the last decade of stored indices, so that the tail-limit statistic at
    noise ``W`` is ``limit_core * (W + I)**(-2/beta)``. ``access`` holds the
    ``1/Y`` values picked by randomized access, in selection order.
    """

    params: NetworkParams
    policy: TruncationPolicy
    seed: int
    inv_top: np.ndarray
    total_power: np.ndarray
    tail_correction: np.ndarray
    n_points: np.ndarray
    truncated: np.ndarray
    limit_core: np.ndarray
    access: np.ndarray

    @property
    def replicates(self) -> int:
        return self.total_power.shape[0]

    def z_top(self, W: float | None = None) -> np.ndarray:
        """Leading STINR values ``Z'_(j)`` at noise ``W`` (default: params.W)."""
        W = self.params.W if W is None else W
        return self.inv_top / (W + self.total_power)[:, None]

    def tail_limit(self, W: float | None = None) -> np.ndarray:
        W = self.params.W if W is None else W
        return self.limit_core * (W + self.total_power) ** (-2.0 / self.params.beta)

    def tail_sd(self) -> np.ndarray:
        """Standard deviation of the power that the analytic tail replaces."""
        p = self.params
        alpha = 2.0 / p.beta
        T = (self.tail_correction / _tail_coefficient(p.a, p.beta)) ** (1.0 / (alpha - 1.0))
        return np.sqrt(tail_power_variance(p.a, p.beta, T))


def _size_biased_pick(weights, uniforms):
    """Sequential selection without replacement with probability proportional
    to weight; returns column indices, one row per replicate."""
    w = np.array(weights, dtype=float, copy=True)
    rows = np.arange(w.shape[0])
    picks = np.empty(uniforms.shape, dtype=np.int64)
    last = w.shape[1] - 1
    for j in range(uniforms.shape[1]):
        c = np.cumsum(w, axis=1)
        target = uniforms[:, j] * c[:, -1]
        idx = np.minimum((c <= target[:, None]).sum(axis=1), last)
        # guard the fp edge where target rounds up onto the total
        bad = w[rows, idx] <= 0
        if bad.any():
            for r in np.flatnonzero(bad):
                idx[r] = np.flatnonzero(w[r] > 0)[-1]
        picks[:, j] = idx
        w[rows, idx] = 0.0
    return picks


def _limit_core(epochs, n_points, a):
    """Mean of ``i * (1/Y_(i))**(2/beta) = i * a / Gamma_i`` over the last decade of stored indices."""
    out = np.empty(epochs.shape[0])
    for n in np.unique(n_points):
        rows = np.flatnonzero(n_points == n)
        lo = math.ceil(n / 10.0)
        i = np.arange(lo, n + 1)
        out[rows] = (i * a / epochs[np.ix_(rows, i - 1)]).mean(axis=1)
    return out


def _propagation_chunk(args):
    lam, beta, K, W, fm, max_points, rel_tail_tol, min_points, seed, substream, start, stop, keep, n_users = args
    params = NetworkParams(lam, beta, K, W, fm)
    R = stop - start
    exps = np.empty((R, max_points))
    for r in range(R):
        RngStream(seed, start + r, substream).generator().standard_exponential(out=exps[r])
    epochs = np.cumsum(exps, axis=1)
    del exps
    inv_y, n, tail, total, truncated = _propagation_rows(epochs, params.a, beta, rel_tail_tol, min_points)
    core = _limit_core(epochs, n, params.a)
    del epochs
    for r in np.flatnonzero(n < max_points):
        inv_y[r, n[r]:] = 0.0
    top = inv_y[:, :keep].copy()
    top[np.arange(keep)[None, :] >= n[:, None]] = np.nan
    if n_users:
        u = np.stack([RngStream(seed, start + r, SUB_ACCESS).generator().random(n_users) for r in range(R)])
        picks = _size_biased_pick(inv_y, u)
        access = np.take_along_axis(inv_y, picks, axis=1)
    else:
        access = np.empty((R, 0))
    return top, total, tail, n, truncated, core, access


def sample_propagation_batch(params: NetworkParams, policy: TruncationPolicy | None, replicates: int,
                             seed: int, keep: int = 10, n_users: int = 0, substream: int = SUB_PROPAGATION,
                             workers: Optional[int] = None) -> PropagationBatch:
    """Summaries of ``replicates`` independent propagation samples.

    Replicate ``r`` is exactly ``sample_propagation_process(params, policy,
    RngStream(seed, r, substream))``; randomized-access picks use
    ``RngStream(seed, r, SUB_ACCESS)`` as `randomized_access` would.
    """
    policy = policy or TruncationPolicy()
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    keep = min(keep, policy.max_points)
    base = (params.lam, params.beta, params.K, params.W, params.fading_moment,
            policy.max_points, policy.rel_tail_tol, policy.min_points, seed, substream)
    jobs = [base + (s, min(s + _BATCH_CHUNK, replicates), keep, n_users)
            for s in range(0, replicates, _BATCH_CHUNK)]
    parts = _map(_propagation_chunk, jobs, workers)
    cols = list(zip(*parts))
    return PropagationBatch(
        params=params,
        policy=policy,
        seed=seed,
        inv_top=np.concatenate(cols[0]),
        total_power=np.concatenate(cols[1]),
        tail_correction=np.concatenate(cols[2]),
        n_points=np.concatenate(cols[3]),
        truncated=np.concatenate(cols[4]),
        limit_core=np.concatenate(cols[5]),
        access=np.concatenate(cols[6]),
    )


def _map(fn, jobs, workers):
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


# --------------------------------------------------------------------------
# planar network


def planar_tail_power(params: NetworkParams, fading: FadingLaw, window_radius: float) -> float:
    """Expected power received from base stations outside the disc of radius ``window_radius``."""
    b = params.beta
    return (2.0 * math.pi * params.lam * fading.moment(1.0) * params.K ** (-b)
            * window_radius ** (2.0 - b) / (b - 2.0))


def sample_planar_network(params: NetworkParams, fading: FadingLaw, window_radius: float, rng: RngStream,
                          tail_tol: float = 1e-2) -> PropagationSample:
    """Poisson base stations in a disc, i.i.d. marks, mapped to ``(K|x|)**beta / S``.

    The expected power from outside the disc must not exceed ``tail_tol``
    (absolute), otherwise `WindowTooSmall` is raised; it is added to
    ``total_power`` as ``tail_correction``. ``params.fading_moment`` must
    agree with the law.
    """
    moment = fading.moment(2.0 / params.beta)
    if not math.isclose(moment, params.fading_moment, rel_tol=1e-9):
        raise RangeError("fading_moment", f"does not match the {fading.kind} law (expected {moment!r})")
    if not window_radius > 0:
        raise ValueError("window_radius must be > 0")
    tail = planar_tail_power(params, fading, window_radius)
    if tail > tail_tol:
        raise WindowTooSmall(
            f"expected out-of-window power {tail:.3g} exceeds {tail_tol:.3g}; "
            f"use a radius of at least {min_window_radius(params, fading, tail_tol):.4g}")
    gen = rng.generator()
    count = gen.poisson(params.lam * math.pi * window_radius**2)
    r = window_radius * np.sqrt(gen.random(count))
    marks = fading.sample(gen, count)
    y = np.sort((params.K * r) ** params.beta / marks)
    stored = float(np.sum(1.0 / y)) if count else 0.0
    return PropagationSample(y, stored + tail, tail, False)


def min_window_radius(params: NetworkParams, fading: FadingLaw, tail_tol: float) -> float:
    b = params.beta
    c = 2.0 * math.pi * params.lam * fading.moment(1.0) * params.K ** (-b) / (b - 2.0)
    return (c / tail_tol) ** (1.0 / (b - 2.0))


# --------------------------------------------------------------------------
# derived statistics


def derive_ratio_sample(prop: PropagationSample, W: float) -> RatioSample:
    """STINR values ``Z'_(i) = (1/Y_(i)) / (W + I)`` in decreasing order."""
    if prop.y.size == 0:
        raise EmptySample("propagation sample holds no points")
    if W < 0:
        raise RangeError("W", "noise power must be >= 0")
    denom = W + prop.total_power
    z = (1.0 / prop.y) / denom
    return RatioSample(
        z=z,
        scale=RatioScale.STIR if W == 0 else RatioScale.STINR,
        w_over_i=W / prop.total_power,
        tail_mass=prop.tail_correction / denom,
    )


def successive_ratios(sample: RatioSample, k: int) -> np.ndarray:
    """``R_i = Z'_(i+1) / Z'_(i)`` for ``i = 1..k``."""
    if sample.z.size < k + 1:
        raise InsufficientPoints(f"need {k + 1} points, sample has {sample.z.size}")
    return sample.z[1:k + 1] / sample.z[:k]


def partial_sum_ratios(sample: RatioSample, i: int) -> tuple[float, float]:
    """``(A_{i-1}, Sigma_i)``: the powers stronger and weaker than the ``i``-th,
    each relative to it. The weaker part includes the analytic tail."""
    if i < 1:
        raise ValueError("i must be >= 1")
    z = sample.z
    if z.size < i + 1:
        raise InsufficientPoints(f"need {i + 1} points, sample has {z.size}")
    zi = z[i - 1]
    a_prev = float(np.sum(z[:i - 1])) / zi
    sigma = (float(np.sum(z[i:])) + sample.tail_mass) / zi
    return a_prev, sigma


def randomized_access(prop: PropagationSample, n_users: int, rng: RngStream) -> np.ndarray:
    """STIR values seen by ``n_users`` users choosing stations in turn.

    Each user picks one of the remaining stored stations with probability
    proportional to its received power ``1/Y``. Tail stations are never
    picked; the selection law differs from the untruncated one by at most
    ``prop.tail_correction / prop.total_power`` in total variation.
    """
    if n_users < 1:
        raise ValueError("n_users must be >= 1")
    if n_users > prop.y.size:
        raise InsufficientPoints(f"{n_users} users but only {prop.y.size} stored stations")
    w = 1.0 / prop.y
    u = rng.generator().random(n_users)
    picks = _size_biased_pick(w[None, :], u[None, :])[0]
    return w[picks] / prop.total_power


def tail_limit_estimate(sample: RatioSample, params: NetworkParams) -> float:
    """Estimate ``lim i * Z'_(i)**(2/beta)`` by averaging over the last decade of indices."""
    n = sample.z.size
    if n < 100:
        raise InsufficientPoints(f"need at least 100 points, sample has {n}")
    i = np.arange(math.ceil(n / 10.0), n + 1)
    return float(np.mean(i * sample.z[i - 1] ** (2.0 / params.beta)))


def total_from_limit(limit: float, params: NetworkParams) -> float:
    """``W + I`` recovered from the tail limit: ``(L / a)**(-beta/2)``."""
    return (limit / params.a) ** (-params.beta / 2.0)
