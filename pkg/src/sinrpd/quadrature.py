"""Tolerance-controlled quadrature on [0, inf), the unit cube and the simplex.

The cube and simplex rules are tensor Gauss-Legendre rules whose order is
doubled until two successive estimates agree. Declared endpoint power
singularities are removed by a change of variables before the rule is
applied; nothing is done to undeclared singularities.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate

from .errors import BudgetExceeded, DomainError, NotSupported

MAX_DIM = 6
_CHUNK = 1 << 16


@dataclass(frozen=True)
class QuadSpec:
    """Tolerances and evaluation budget for one integral.

    ``rel_tol=None`` selects the default for the dimension: 1e-9 in one
    dimension, 1e-6 otherwise.
    """

    rel_tol: Optional[float] = None
    abs_tol: float = 1e-14
    max_evals: int = 4_000_000

    def __post_init__(self):
        if self.rel_tol is not None and not self.rel_tol > 0:
            raise ValueError("rel_tol must be > 0")
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be > 0")
        if self.max_evals < 1000:
            raise ValueError("max_evals must be >= 1000")

    def tolerance(self, dim: int) -> float:
        if self.rel_tol is not None:
            return self.rel_tol
        return 1e-9 if dim <= 1 else 1e-6


class QuadResult(NamedTuple):
    value: float
    error: float
    n_evals: int
    converged: bool = True


def _spec(spec):
    return QuadSpec() if spec is None else spec


def _budget_warning(what, result):
    warnings.warn(
        f"{what}: evaluation budget exhausted after {result.n_evals} evaluations "
        f"(estimate {result.value!r}, error {result.error:.3g})",
        BudgetExceeded,
        stacklevel=3,
    )


def integrate_semi_infinite(
    f: Callable[[float], float],
    dominating: Callable[[float], float],
    spec: QuadSpec | None = None,
) -> QuadResult:
    """Integrate ``f`` over [0, inf) given a dominating envelope ``|f| <= dominating``.

    The range is cut at the first point ``T`` (searched by doubling) from
    which the envelope stays below ``abs_tol / 100``; the finite part is
    handled by adaptive Gauss-Kronrod and the envelope's tail mass beyond
    ``T`` is added to the reported error.
    """
    spec = _spec(spec)
    rtol = spec.tolerance(1)
    cutoff = spec.abs_tol / 100.0

    T = 1.0
    while not all(dominating(T * k) < cutoff for k in (1.0, 1.5, 2.0, 4.0)):
        T *= 2.0
        if T > 1e12:
            raise DomainError("dominating function does not decay below the cutoff")

    limit = max(50, spec.max_evals // 21)
    out = integrate.quad(f, 0.0, T, epsabs=spec.abs_tol, epsrel=rtol, limit=limit, full_output=1)
    value, err, info = out[0], out[1], out[2]
    tail, _ = integrate.quad(dominating, T, np.inf, limit=200)
    error = float(err + abs(tail))
    converged = len(out) == 3 and error <= max(rtol * abs(value), spec.abs_tol) * 10
    result = QuadResult(float(value), error, int(info["neval"]), converged)
    if not converged:
        _budget_warning("integrate_semi_infinite", result)
    return result


def _needs_substitution(exponent):
    return exponent is not None and exponent < 1.0 and exponent != 0.0


def _check_exponent(exponent):
    if exponent is not None and not exponent > -1.0:
        raise DomainError(f"declared endpoint exponent {exponent} is not integrable (must be > -1)")


@lru_cache(maxsize=64)
def _gauss_legendre01(order):
    x, w = leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=256)
def _rule_1d(order, lower, upper):
    """Nodes, their complements ``1 - x`` and weights on [0, 1].

    Near an endpoint where the integrand behaves like ``x**e`` the map
    ``x = y**q`` with ``q = 2/(1+e)`` turns ``x**e dx`` into ``q*y dy``.
    Complements are formed directly so they stay accurate next to 1.
    """
    y, w = _gauss_legendre01(order)
    sub_lo, sub_hi = _needs_substitution(lower), _needs_substitution(upper)
    if not (sub_lo or sub_hi):
        return y, 1.0 - y, w
    if sub_lo and not sub_hi:
        q = 2.0 / (1.0 + lower)
        x = y**q
        return x, 1.0 - x, w * q * y ** (q - 1.0)
    if sub_hi and not sub_lo:
        q = 2.0 / (1.0 + upper)
        xc = y**q
        return 1.0 - xc, xc, w * q * y ** (q - 1.0)
    # both ends: one substituted rule per half
    q_lo = 2.0 / (1.0 + lower)
    q_hi = 2.0 / (1.0 + upper)
    left_x = 0.5 * y**q_lo
    left_w = 0.5 * w * q_lo * y ** (q_lo - 1.0)
    right_c = 0.5 * y**q_hi
    right_w = 0.5 * w * q_hi * y ** (q_hi - 1.0)
    x = np.concatenate([left_x, (1.0 - right_c)[::-1]])
    xc = np.concatenate([1.0 - left_x, right_c[::-1]])
    return x, xc, np.concatenate([left_w, right_w[::-1]])


def _tensor_sum(f, rules, with_complement):
    """Apply the product rule; partial sums are combined with `math.fsum` so the
    result does not depend on chunking."""
    tiny = np.finfo(float).tiny
    nodes = [np.maximum(r[0], tiny) for r in rules]
    comps = [np.maximum(r[1], tiny) for r in rules]
    weights = [r[2] for r in rules]
    sizes = tuple(len(n) for n in nodes)
    total = math.prod(sizes)
    partials = []
    for start in range(0, total, _CHUNK):
        idx = np.unravel_index(np.arange(start, min(start + _CHUNK, total)), sizes)
        pts = np.column_stack([nodes[k][idx[k]] for k in range(len(sizes))])
        w = np.ones(pts.shape[0])
        for k in range(len(sizes)):
            w = w * weights[k][idx[k]]
        if with_complement:
            cpts = np.column_stack([comps[k][idx[k]] for k in range(len(sizes))])
            vals = np.asarray(f(pts, cpts), dtype=float)
        else:
            vals = np.asarray(f(pts), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise DomainError("integrand is not finite at a quadrature node; declare its endpoint exponents")
        partials.append(float(np.dot(w, vals)))
    return math.fsum(partials), total


def _normalise_singularities(d, singularities):
    if singularities is None:
        return [(None, None)] * d
    sing = [tuple(s) if s is not None else (None, None) for s in singularities]
    if len(sing) != d:
        raise ValueError(f"expected {d} singularity declarations, got {len(sing)}")
    for lo, hi in sing:
        _check_exponent(lo)
        _check_exponent(hi)
    return sing


def integrate_unit_cube(
    f: Callable[[np.ndarray], np.ndarray],
    d: int,
    spec: QuadSpec | None = None,
    singularities: Sequence[tuple] | None = None,
    with_complement: bool = False,
) -> QuadResult:
    """Integrate a vectorised ``f`` over ``[0, 1]**d``.

    ``f`` receives an ``(m, d)`` array and returns ``m`` values. For
    ``d == 0`` the empty integral is the bare value ``f`` takes on the single
    empty point. ``singularities`` lists ``(lower, upper)`` endpoint exponents
    per axis; ``None`` entries mean the axis is regular at that end. With
    ``with_complement=True``, ``f`` is called as ``f(x, 1 - x)`` with the
    complement computed without cancellation.
    """
    spec = _spec(spec)
    if d < 0:
        raise ValueError("dimension must be >= 0")
    if d > MAX_DIM:
        raise NotSupported(f"cube dimension {d} exceeds the supported maximum {MAX_DIM}")
    if d == 0:
        empty = np.empty((1, 0))
        value = f(empty, empty) if with_complement else f(empty)
        return QuadResult(float(np.asarray(value, dtype=float).reshape(-1)[0]), 0.0, 1)

    sing = _normalise_singularities(d, singularities)
    rtol = spec.tolerance(d)
    order = 8 if d <= 2 else 4
    n_evals = 0
    previous = None
    result = None
    while True:
        rules = [_rule_1d(order, lo, hi) for lo, hi in sing]
        cost = math.prod(len(r[0]) for r in rules)
        if previous is not None and n_evals + cost > spec.max_evals:
            result = result._replace(converged=False)
            _budget_warning("integrate_unit_cube", result)
            return result
        value, used = _tensor_sum(f, rules, with_complement)
        n_evals += used
        if previous is not None:
            err = abs(value - previous)
            result = QuadResult(value, err, n_evals, True)
            if err <= max(rtol * abs(value), spec.abs_tol):
                return result
        else:
            result = QuadResult(value, math.inf, n_evals, False)
        previous = value
        order *= 2


def integrate_simplex(
    f: Callable[[np.ndarray], np.ndarray],
    n: int,
    spec: QuadSpec | None = None,
    face_exponent: float | None = None,
    coord_exponents: Sequence[float | None] | None = None,
    pass_rest: bool = False,
) -> QuadResult:
    """Integrate a vectorised ``f`` over ``{t >= 0, sum(t) <= 1}`` in ``n`` dimensions.

    The simplex is mapped onto the cube by stick breaking,
    ``t_i = x_i * prod_{j<i}(1 - x_j)``, whose Jacobian is
    ``prod_j (1 - x_j)**(n - j)`` and under which ``1 - sum(t) = prod_j (1 - x_j)``.
    ``face_exponent`` declares behaviour ``(1 - sum t)**e`` at the far face;
    ``coord_exponents`` declares ``t_i**c_i`` at the coordinate faces.
    With ``pass_rest=True`` the integrand is called as ``f(t, rest)`` where
    ``rest`` is ``1 - sum(t)`` computed without cancellation.
    """
    spec = _spec(spec)
    if n > MAX_DIM:
        raise NotSupported(f"simplex dimension {n} exceeds the supported maximum {MAX_DIM}")
    _check_exponent(face_exponent)
    coord = list(coord_exponents) if coord_exponents is not None else [None] * n
    if len(coord) != n:
        raise ValueError(f"expected {n} coordinate exponents, got {len(coord)}")
    for c in coord:
        _check_exponent(c)
    if n == 0:
        if pass_rest:
            return integrate_unit_cube(lambda x: f(x, np.ones(x.shape[0])), 0, spec)
        return integrate_unit_cube(f, 0, spec)

    sing = []
    for j in range(n):
        upper = None
        if face_exponent is not None or any(c is not None for c in coord[j + 1:]):
            upper = (face_exponent or 0.0) + (n - 1 - j) + sum(c or 0.0 for c in coord[j + 1:])
        sing.append((coord[j], upper))

    def mapped(x, one_minus):
        rem = np.ones(x.shape[0])
        t = np.empty_like(x)
        jac = np.ones(x.shape[0])
        for j in range(n):
            t[:, j] = rem * x[:, j]
            jac = jac * rem
            rem = rem * one_minus[:, j]
        return (f(t, rem) if pass_rest else f(t)) * jac

    return integrate_unit_cube(mapped, n, spec, sing, with_complement=True)
