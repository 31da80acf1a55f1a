"""Analytic statistics of the STINR process and of PD(alpha, theta).

Functions that need quadrature accept a `QuadSpec` and, with
``full_output=True``, return ``(value, error_estimate)`` instead of the bare
value.
"""

from __future__ import annotations

import math
import warnings
from typing import Sequence

import numpy as np
from scipy import integrate, stats
from scipy.special import betaln, gammaincc
from scipy.special import gamma as gamma_fn

from .errors import DomainError, NotSupported
from .model import MomentQuery, NetworkParams, PDParams, Scale, hat_transform
from .quadrature import MAX_DIM, QuadSpec, integrate_semi_infinite, integrate_simplex, integrate_unit_cube

__all__ = [
    "c_prime",
    "eval_I",
    "eval_J",
    "eta_chain",
    "moment_measure",
    "noise_factor",
    "c_const",
    "c_const_network",
    "moment_density",
    "integrated_density",
    "simplex_power_integral",
    "phi_psi",
    "inv_stir_laplace",
    "dickman",
    "joint_order_density",
    "sbp_joint_density",
    "stick_breaking_density",
    "stick_breaking_mean",
    "stick_breaking_pair_cdf",
    "interference_laplace",
    "successive_ratio_cdf",
    "nearest_propagation_cdf",
]


def _out(value, error, full_output):
    return (value, error) if full_output else value


def _check_beta(beta):
    if not beta > 2:
        raise DomainError(f"path-loss exponent must exceed 2, got {beta}")


def c_prime(beta: float) -> float:
    """``2 pi / (beta sin(2 pi / beta))``, equal to ``Gamma(1 + 2/beta) Gamma(1 - 2/beta)``."""
    _check_beta(beta)
    x = 2.0 * math.pi / beta
    return x / math.sin(x)


def eval_I(n: int, beta: float, x: float, spec: QuadSpec | None = None, full_output: bool = False):
    """Noise integral of order ``n``.

    .. math::

        \\frac{2^n}{\\beta^{n-1} C'(\\beta)^n (n-1)!}
        \\int_0^\\infty u^{2n-1} e^{-u^2 - u^\\beta x \\Gamma(1-2/\\beta)^{-\\beta/2}} du

    At ``x = 0`` this reduces to ``2**(n-1) / (beta**(n-1) C'(beta)**n)``.
    """
    _check_beta(beta)
    if n < 1 or int(n) != n:
        raise DomainError("order n must be an integer >= 1")
    if n > MAX_DIM:
        raise NotSupported(f"order {n} exceeds the supported maximum {MAX_DIM}")
    if not x >= 0:
        raise DomainError("x must be >= 0")
    k = x * gamma_fn(1.0 - 2.0 / beta) ** (-beta / 2.0)
    p = 2 * n - 1

    def f(u):
        return u**p * math.exp(-u * u - k * u**beta)

    def envelope(u):
        return u**p * math.exp(-u * u)

    res = integrate_semi_infinite(f, envelope, spec)
    scale = 2.0**n / (beta ** (n - 1) * c_prime(beta) ** n * math.factorial(n - 1))
    return _out(scale * res.value, scale * res.error, full_output)


def eta_chain(v: np.ndarray) -> np.ndarray:
    """Map ``v`` in ``[0,1]^(n-1)`` (rows) to weights ``eta`` summing to one.

    ``eta_1 = v_1 v_2 ... v_{n-1}``, ``eta_k = (1 - v_{k-1}) v_k ... v_{n-1}``
    for ``k >= 2``, so ``eta_n = 1 - v_{n-1}``.
    """
    v = np.atleast_2d(np.asarray(v, dtype=float))
    return _eta(v, 1.0 - v)


def _eta(v, vc):
    m, d = v.shape
    n = d + 1
    eta = np.empty((m, n))
    # suffix products v_k ... v_{n-1}
    suffix = np.ones((m, n))
    for k in range(d - 1, -1, -1):
        suffix[:, k] = suffix[:, k + 1] * v[:, k]
    eta[:, 0] = suffix[:, 0]
    for k in range(1, n):
        eta[:, k] = vc[:, k - 1] * suffix[:, k]
    return eta


def eval_J(n: int, beta: float, x: Sequence[float], spec: QuadSpec | None = None, full_output: bool = False):
    """Threshold integral of order ``n`` over the unit cube in ``n - 1`` variables.

    .. math::

        \\frac{1 + \\sum_j x_j}{n} \\int_{[0,1]^{n-1}}
        \\frac{\\prod_{i<n} v_i^{i(2/\\beta+1)-1}(1-v_i)^{2/\\beta}}{\\prod_{i\\le n}(x_i+\\eta_i)} dv
    """
    _check_beta(beta)
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != n:
        raise DomainError(f"expected {n} arguments")
    if np.any(x < 0):
        raise DomainError("arguments must be >= 0")
    if n == 1:
        return _out(1.0, 0.0, full_output)
    if n > MAX_DIM:
        raise NotSupported(f"order {n} exceeds the supported maximum {MAX_DIM}")
    alpha = 2.0 / beta
    powers = np.arange(1, n) * (alpha + 1.0) - 1.0

    def integrand(v, vc):
        num = np.prod(v**powers * vc**alpha, axis=1)
        den = np.prod(x + _eta(v, vc), axis=1)
        return num / den

    # exponents reached when the matching x_i vanish
    sing = [(i * alpha - 1.0, alpha - 1.0) for i in range(1, n)]
    res = integrate_unit_cube(integrand, n - 1, spec, sing, with_complement=True)
    scale = (1.0 + float(np.sum(x))) / n
    return _out(scale * res.value, scale * res.error, full_output)


def moment_measure(params: NetworkParams, query: MomentQuery, spec: QuadSpec | None = None,
                   full_output: bool = False):
    """Factorial moment measure ``M'^(n)`` of the STINR process.

    ``E[#\\{distinct (Z'_1..Z'_n): Z'_j > t'_j\\}]``; SINR-scale queries are
    first mapped through ``t' = t / (1 + t)``. Zero outside the simplex.
    """
    t = query.stinr_thresholds()
    n = query.n
    if float(np.sum(t)) >= 1.0:
        return _out(0.0, 0.0, full_output)
    t_hat = hat_transform(t)
    alpha = params.alpha
    x = params.W * params.a ** (-params.beta / 2.0)
    i_val, i_err = eval_I(n, params.beta, x, spec, full_output=True)
    j_val, j_err = eval_J(n, params.beta, t_hat, spec, full_output=True)
    pre = math.factorial(n) * float(np.prod(t_hat ** (-alpha)))
    value = pre * i_val * j_val
    rel = i_err / i_val + (j_err / j_val if j_val else 0.0)
    return _out(value, abs(value) * rel, full_output)


def noise_factor(n: int, beta: float, W: float, a: float, spec: QuadSpec | None = None) -> float:
    """Ratio ``I_n(W a^(-beta/2)) / I_n(0)``, the factor by which noise scales the moments."""
    if W < 0:
        raise DomainError("noise power must be >= 0")
    if W == 0:
        return 1.0
    x = W * a ** (-beta / 2.0)
    return eval_I(n, beta, x, spec) / eval_I(n, beta, 0.0, spec)


def c_const(n: int, params: PDParams) -> float:
    """``prod_{i=1..n} Gamma(theta + 1 + (i-1) alpha) / (Gamma(1 - alpha) Gamma(theta + i alpha))``."""
    if n < 0 or int(n) != n:
        raise DomainError("n must be a non-negative integer")
    a, th = params.alpha, params.theta
    log_c = 0.0
    for i in range(1, n + 1):
        num, den = th + 1.0 + (i - 1) * a, th + i * a
        if num <= 0 or den <= 0:
            raise DomainError("Gamma arguments must be positive")
        log_c += math.lgamma(num) - math.lgamma(1.0 - a) - math.lgamma(den)
    return math.exp(log_c)


def c_const_network(n: int, beta: float) -> float:
    """``c_{n, 2/beta, 0}`` in its reduced form ``(2/beta)^(n-1) Gamma(n) / (Gamma(2n/beta) Gamma(1-2/beta)^n)``."""
    _check_beta(beta)
    if n < 1:
        raise DomainError("reduced form needs n >= 1")
    alpha = 2.0 / beta
    return math.exp((n - 1) * math.log(alpha) + math.lgamma(n) - math.lgamma(n * alpha)
                    - n * math.lgamma(1.0 - alpha))


def moment_density(params: NetworkParams, query: MomentQuery, spec: QuadSpec | None = None) -> float:
    """Factorial moment density ``mu^(n)`` of the STINR process (closed form).

    ``c_{n,2/beta,0} * noise_factor * prod t_i^-(2/beta+1) * (1 - sum t)^(2n/beta - 1)``
    strictly inside the simplex, zero elsewhere. A density is not invariant
    under the change of scale, so SINR-scale queries are rejected.
    """
    if query.scale is not Scale.STINR:
        raise DomainError("the moment density is defined on the STINR scale")
    t = query.stinr_thresholds()
    rest = 1.0 - float(np.sum(t))
    if rest <= 0:
        return 0.0
    n, alpha = query.n, params.alpha
    nf = noise_factor(n, params.beta, params.W, params.a, spec)
    return (c_const(n, params.pd_params()) * nf * float(np.prod(t ** (-(alpha + 1.0))))
            * rest ** (n * alpha - 1.0))


def simplex_power_integral(lower: Sequence[float], alpha: float, exponent: float,
                           spec: QuadSpec | None = None):
    """``int prod t_i^(-alpha-1) (1 - sum t)^exponent dt`` over ``{t >= lower} ∩ simplex``.

    The region is the simplex of side ``r = 1 - sum(lower)`` shifted to
    ``lower``; after rescaling, the only singular factor left is the far-face
    power, which is declared to the quadrature. Returns a `QuadResult`.
    """
    low = np.asarray(lower, dtype=float)
    n = low.size
    if np.any(low <= 0):
        raise DomainError("lower corner must be strictly positive")
    r = 1.0 - float(np.sum(low))
    if r <= 0:
        from .quadrature import QuadResult
        return QuadResult(0.0, 0.0, 0)

    def f(w, rest):
        return np.prod((low + r * w) ** (-alpha - 1.0), axis=1) * rest**exponent

    res = integrate_simplex(f, n, spec, face_exponent=exponent, pass_rest=True)
    scale = r ** (n + exponent)
    return res._replace(value=scale * res.value, error=scale * res.error)


def integrated_density(params: NetworkParams, query: MomentQuery, spec: QuadSpec | None = None,
                       full_output: bool = False):
    """Integral of `moment_density` over ``(t'_1, 1] x ... x (t'_n, 1]`` within the simplex.

    Agrees with `moment_measure` at the same thresholds; computed by
    quadrature of the density, independently of the noise/threshold integrals.
    """
    t = query.stinr_thresholds()
    n, alpha = query.n, params.alpha
    res = simplex_power_integral(t, alpha, n * alpha - 1.0, spec)
    c = c_const(n, params.pd_params()) * noise_factor(n, params.beta, params.W, params.a, spec)
    return _out(c * res.value, c * res.error, full_output)


def phi_psi(beta: float, gamma: float, spec: QuadSpec | None = None) -> tuple[float, float]:
    """``(phi, psi)`` where ``phi = (2/beta) int_1^inf e^(-gamma x) x^(-2/beta-1) dx``
    and ``psi = Gamma(1 - 2/beta) gamma^(2/beta) + phi``."""
    _check_beta(beta)
    if not gamma >= 0:
        raise DomainError("gamma must be >= 0")
    if gamma == 0:
        return 1.0, 1.0
    alpha = 2.0 / beta

    def f(u):
        return alpha * math.exp(-gamma * (1.0 + u)) * (1.0 + u) ** (-alpha - 1.0)

    phi = integrate_semi_infinite(f, f, spec).value
    psi = float(gamma_fn(1.0 - alpha)) * gamma**alpha + phi
    return phi, psi


def inv_stir_laplace(beta: float, i: int, gamma: float, spec: QuadSpec | None = None) -> float:
    """``E[exp(-gamma / Z'_(i))] = e^(-gamma) phi^(i-1) psi^(-i)`` for the STIR process."""
    if i < 1:
        raise DomainError("i must be >= 1")
    phi, psi = phi_psi(beta, gamma, spec)
    return math.exp(-gamma) * phi ** (i - 1) * psi ** (-i)


def dickman(params: PDParams, s: float, spec: QuadSpec | None = None, full_output: bool = False):
    """Two-parameter Dickman function ``P(V_1 < 1/s)`` for PD(alpha, theta).

    Inclusion-exclusion over the factorial moments of the points above
    ``1/s``; only ``n <= s`` terms are non-zero. The value is clipped to
    [0, 1]; a warning is issued if it strays by more than its error budget.
    """
    if not s > 0:
        raise DomainError("s must be > 0")
    n_max = math.floor(s)
    if n_max > MAX_DIM:
        raise NotSupported(f"s = {s} needs simplex dimension {n_max} > {MAX_DIM}")
    alpha, theta = params.alpha, params.theta
    terms = [1.0]
    error = 0.0
    for n in range(1, n_max + 1):
        res = simplex_power_integral([1.0 / s] * n, alpha, theta + alpha * n - 1.0, spec)
        weight = c_const(n, params) / math.factorial(n)
        terms.append((-1) ** n * weight * res.value)
        error += weight * res.error
    value = math.fsum(terms)
    if value < 0.0 or value > 1.0:
        if min(abs(value), abs(value - 1.0)) > error:
            warnings.warn(f"Dickman sum {value!r} lies outside [0, 1] beyond its error {error:.3g}",
                          RuntimeWarning, stacklevel=2)
        value = min(max(value, 0.0), 1.0)
    return _out(value, error, full_output)


def joint_order_density(params: NetworkParams, m: int, t: Sequence[float], spec: QuadSpec | None = None) -> float:
    """Joint density of the ``m`` largest STIR values at decreasing ``t``."""
    if params.W != 0:
        raise DomainError("the order-statistic density is available for W = 0 only")
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or t.size != m:
        raise DomainError(f"expected {m} values")
    if np.any(t <= 0) or (m > 1 and not np.all(np.diff(t) < 0)):
        raise DomainError("values must be positive and strictly decreasing")
    rest = 1.0 - float(np.sum(t))
    if rest <= 0:
        raise DomainError("values must sum to less than one")
    alpha = params.alpha
    rho = dickman(PDParams(alpha, m * alpha), rest / t[-1], spec)
    return (c_const(m, params.pd_params()) * float(np.prod(t ** (-(alpha + 1.0))))
            * rest ** (m * alpha - 1.0) * rho)


def stick_breaking_density(params: PDParams, u: Sequence[float]) -> float:
    """Joint density of the first ``k = len(u)`` stick-breaking weights.

    With ``r_i = 1 - u_1 - ... - u_{i-1}`` the breaks are ``U_i = u_i / r_i``,
    independent ``Beta(1 - alpha, theta + i alpha)``. The map from ``U`` to
    the weights is triangular with diagonal ``r_i``, so the density is
    ``prod_i beta_pdf(U_i) / r_i``.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or u.size == 0:
        raise DomainError("need at least one weight")
    remaining = 1.0 - np.concatenate(([0.0], np.cumsum(u)[:-1]))
    if np.any(u <= 0) or float(np.sum(u)) >= 1.0:
        raise DomainError("weights must be positive with sum below one")
    breaks = u / remaining
    a = 1.0 - params.alpha
    b = params.theta + params.alpha * np.arange(1, u.size + 1)
    log_pdf = (a - 1.0) * np.log(breaks) + (b - 1.0) * np.log1p(-breaks) - betaln(a, b)
    return float(np.exp(np.sum(log_pdf) - np.sum(np.log(remaining))))


def sbp_joint_density(beta: float, k: int, u: Sequence[float]) -> float:
    """Joint density of the first ``k`` STIR values picked by randomized access."""
    _check_beta(beta)
    u = np.asarray(u, dtype=float)
    if u.size != k:
        raise DomainError(f"expected {k} values")
    return stick_breaking_density(PDParams(2.0 / beta, 0.0), u)


def stick_breaking_pair_cdf(params: PDParams, x: float, y: float) -> float:
    """``P(V~_1 <= x, V~_2 <= y)`` for the first two stick-breaking weights.

    Conditioning on ``U_1 = u`` gives ``P(U_2 <= y / (1 - u))``, so the CDF is
    the one-dimensional integral of ``Beta(1-a, th+a).pdf(u) * Beta(1-a, th+2a).cdf(y/(1-u))``
    over ``u <= x``. The substitution ``u = w**(1/(1-a))`` absorbs the
    ``u**(-a)`` endpoint behaviour.
    """
    a, th = params.alpha, params.theta
    x = min(max(float(x), 0.0), 1.0)
    y = max(float(y), 0.0)
    if x == 0.0 or y == 0.0:
        return 0.0
    b1, b2 = th + a, th + 2.0 * a
    q = 1.0 / (1.0 - a)
    log_norm = -betaln(1.0 - a, b1)

    def f(w):
        u = w**q
        if u >= 1.0:
            return 0.0
        inner = stats.beta.cdf(min(y / (1.0 - u), 1.0), 1.0 - a, b2)
        # u**(-a) du = q dw, leaving only the (1 - u)**(b1 - 1) factor
        return q * math.exp(log_norm + (b1 - 1.0) * math.log1p(-u)) * inner

    w_max = x ** (1.0 - a)
    kink = (1.0 - y) ** (1.0 - a) if y < 1.0 else None
    points = [kink] if kink is not None and 0.0 < kink < w_max else None
    value, _ = integrate.quad(f, 0.0, w_max, points=points, limit=200, epsabs=1e-12, epsrel=1e-10)
    return min(max(value, 0.0), 1.0)


def stick_breaking_mean(params: PDParams, i: int) -> float:
    """``E[V~_i] = E[U_i] prod_{j<i} E[1 - U_j]``."""
    a, th = params.alpha, params.theta
    mean_u = [(1.0 - a) / (1.0 + th + (j - 1) * a) for j in range(1, i + 1)]
    return mean_u[-1] * math.prod(1.0 - m for m in mean_u[:-1])


def interference_laplace(a: float, beta: float, z: float) -> float:
    """``E[exp(-z I)] = exp(-a Gamma(1 - 2/beta) z^(2/beta))``."""
    _check_beta(beta)
    return math.exp(-a * gamma_fn(1.0 - 2.0 / beta) * z ** (2.0 / beta))


def successive_ratio_cdf(beta: float, i: int, r):
    """``P(Z'_(i+1) / Z'_(i) <= r) = r^(2i/beta)`` on [0, 1]."""
    r = np.clip(np.asarray(r, dtype=float), 0.0, 1.0)
    return r ** (2.0 * i / beta)


def nearest_propagation_cdf(params: NetworkParams, t):
    """``P(Y_(1) <= t) = 1 - exp(-a t^(2/beta))``."""
    t = np.maximum(np.asarray(t, dtype=float), 0.0)
    return -np.expm1(-params.a * t ** (2.0 / params.beta))


def phi_psi_incomplete_gamma(beta: float, gamma: float) -> tuple[float, float]:
    """``(phi, psi)`` through the upper incomplete gamma function; used as a cross-check.

    Integration by parts gives ``phi = e^-g - g^a Gamma(1-a) Q(1-a, g)``.
    """
    alpha = 2.0 / beta
    g1 = float(gamma_fn(1.0 - alpha))
    phi = math.exp(-gamma) - gamma**alpha * g1 * float(gammaincc(1.0 - alpha, gamma))
    return phi, g1 * gamma**alpha + phi
