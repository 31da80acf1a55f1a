import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import beta as beta_fn
from scipy.special import gamma as gamma_fn

from sinrpd.errors import BudgetExceeded, DomainError, NotSupported
from sinrpd.quadrature import QuadSpec, integrate_semi_infinite, integrate_simplex, integrate_unit_cube


def dirichlet_integral(c, e):
    """int over the simplex of prod t_i**c_i * (1 - sum t)**e."""
    c = np.asarray(c, dtype=float)
    return float(np.prod(gamma_fn(c + 1)) * gamma_fn(e + 1) / gamma_fn(np.sum(c + 1) + e + 1))


def test_quadspec_defaults_and_validation():
    spec = QuadSpec()
    assert spec.tolerance(1) == 1e-9 and spec.tolerance(3) == 1e-6
    assert QuadSpec(rel_tol=1e-4).tolerance(1) == 1e-4
    for bad in ({"rel_tol": 0.0}, {"abs_tol": -1.0}, {"max_evals": 999}):
        with pytest.raises(ValueError):
            QuadSpec(**bad)


def test_semi_infinite_gaussian_moment():
    res = integrate_semi_infinite(lambda u: 2 * u * math.exp(-u * u), lambda u: 2 * u * math.exp(-u * u))
    assert res.value == pytest.approx(1.0, rel=1e-9)
    assert res.converged


def test_semi_infinite_gamma_integral():
    f = lambda u: u**3 * math.exp(-u * u)  # noqa: E731
    assert integrate_semi_infinite(f, f).value == pytest.approx(0.5, rel=1e-9)


def test_semi_infinite_noise_integral_at_zero():
    # (2 / C'(4)) int u exp(-u^2) du with C'(4) = pi/2
    f = lambda u: u * math.exp(-u * u)  # noqa: E731
    value = 2.0 / (math.pi / 2.0) * integrate_semi_infinite(f, f).value
    assert value == pytest.approx(2 / math.pi, rel=1e-9)


def test_semi_infinite_rejects_non_decaying_envelope():
    with pytest.raises(DomainError):
        integrate_semi_infinite(lambda u: 1.0, lambda u: 1.0)


def test_cube_zero_dimension_is_evaluation():
    res = integrate_unit_cube(lambda x: np.full(x.shape[0], 7.0), 0)
    assert res.value == 7.0 and res.error == 0.0


def test_cube_declared_singularity():
    res = integrate_unit_cube(lambda x: x[:, 0] ** -0.5, 1, singularities=[(-0.5, None)])
    assert res.value == pytest.approx(2.0, rel=1e-9)


def test_cube_unit_volume():
    assert integrate_unit_cube(lambda x: np.ones(x.shape[0]), 2).value == pytest.approx(1.0, rel=1e-14)


def test_cube_two_sided_singularity():
    f = lambda x: x[:, 0] ** -0.7 * (1 - x[:, 0]) ** -0.4  # noqa: E731
    res = integrate_unit_cube(f, 1, singularities=[(-0.7, -0.4)])
    assert res.value == pytest.approx(beta_fn(0.3, 0.6), rel=1e-9)


def test_cube_complement_is_exact_near_one():
    # (1 - x)**-0.9 needs 1 - x without cancellation at the substituted nodes
    res = integrate_unit_cube(lambda x, xc: xc[:, 0] ** -0.9, 1, singularities=[(None, -0.9)], with_complement=True)
    assert res.value == pytest.approx(10.0, rel=1e-9)


def test_invalid_declarations():
    with pytest.raises(DomainError):
        integrate_unit_cube(lambda x: x[:, 0], 1, singularities=[(-1.0, None)])
    with pytest.raises(DomainError):
        integrate_simplex(lambda t: t[:, 0], 2, face_exponent=-1.5)
    with pytest.raises(ValueError):
        integrate_unit_cube(lambda x: x[:, 0], 2, singularities=[(None, None)])


def test_dimension_cap():
    with pytest.raises(NotSupported):
        integrate_unit_cube(lambda x: x[:, 0], 7)
    with pytest.raises(NotSupported):
        integrate_simplex(lambda t: t[:, 0], 7)


def test_non_finite_integrand_is_reported():
    with pytest.raises(DomainError):
        integrate_unit_cube(lambda x: np.full(x.shape[0], np.nan), 1)


def test_budget_exhaustion_warns_and_returns_estimate():
    spec = QuadSpec(rel_tol=1e-12, max_evals=1000)
    with pytest.warns(BudgetExceeded):
        res = integrate_unit_cube(lambda x: x[:, 0] ** -0.9 * x[:, 1] ** -0.9, 2, spec)
    assert not res.converged
    assert math.isfinite(res.value)


def test_simplex_volume():
    assert integrate_simplex(lambda t: np.ones(t.shape[0]), 2).value == pytest.approx(0.5, rel=1e-14)
    assert integrate_simplex(lambda t: np.ones(t.shape[0]), 4).value == pytest.approx(1 / 24, rel=1e-12)


def test_simplex_face_singularity_1d():
    res = integrate_simplex(lambda t, rest: rest**-0.5, 1, face_exponent=-0.5, pass_rest=True)
    assert res.value == pytest.approx(2.0, rel=1e-9)


def test_simplex_face_singularity_2d_against_midpoint_oracle():
    res = integrate_simplex(lambda t, rest: rest**-0.5, 2, face_exponent=-0.5, pass_rest=True)
    # independent oracle: with s = t1 + t2 = 1 - r^2 and t1 = s w the integral is
    # int int 2 (1 - r^2) dr dw over the unit square; midpoint rule on 1000 x 1000 cells
    m = 1000
    r = (np.arange(m) + 0.5) / m
    midpoint = float(np.sum(2 * (1 - r**2)) / m)  # the w direction integrates to 1 exactly
    assert res.value == pytest.approx(midpoint, rel=1e-4)
    assert res.value == pytest.approx(4 / 3, rel=1e-6)


@pytest.mark.parametrize("c, e", [((0.0, 0.0, 0.0), -0.9), ((-0.5, 0.3), -0.5), ((-0.3, -0.3, -0.3), 0.2)])
def test_simplex_dirichlet_integrals(c, e):
    n = len(c)
    f = lambda t, rest: np.prod(t ** np.asarray(c), axis=1) * rest**e  # noqa: E731
    res = integrate_simplex(f, n, face_exponent=e, coord_exponents=c, pass_rest=True)
    assert res.value == pytest.approx(dirichlet_integral(c, e), rel=1e-5)


def test_results_are_bit_stable():
    f = lambda t, rest: np.exp(-t.sum(axis=1)) * rest**-0.3  # noqa: E731
    a = integrate_simplex(f, 3, face_exponent=-0.3, pass_rest=True)
    b = integrate_simplex(f, 3, face_exponent=-0.3, pass_rest=True)
    assert a == b


coefs = st.lists(st.floats(min_value=-5, max_value=5), min_size=4, max_size=4)


@settings(max_examples=30, deadline=None)
@given(coefs, coefs, st.floats(min_value=-3, max_value=3), st.floats(min_value=-3, max_value=3))
def test_linearity_on_random_polynomials(p, q, a, b):
    def poly(c):
        return lambda x: c[0] + c[1] * x[:, 0] + c[2] * x[:, 1] ** 2 + c[3] * x[:, 0] * x[:, 1] ** 3

    f, g = poly(p), poly(q)
    spec = QuadSpec()
    combo = integrate_unit_cube(lambda x: a * f(x) + b * g(x), 2, spec).value
    separate = a * integrate_unit_cube(f, 2, spec).value + b * integrate_unit_cube(g, 2, spec).value
    scale = abs(a) * sum(map(abs, p)) + abs(b) * sum(map(abs, q)) + 1e-300
    assert abs(combo - separate) <= 10 * spec.tolerance(2) * scale


def _known_integrals():
    """Twenty integrands with closed forms, as ``(name, run(spec) -> QuadResult, exact)``."""
    cases = []
    for k in (1, 2, 3, 5):
        f = lambda u, k=k: u ** (2 * k - 1) * math.exp(-u * u)  # noqa: E731
        cases.append((f"gamma_{k}", lambda spec, f=f: integrate_semi_infinite(f, f, spec), math.gamma(k) / 2))
    f = lambda u: math.exp(-u * u)  # noqa: E731
    cases.append(("half_gauss", lambda spec, f=f: integrate_semi_infinite(f, f, spec), math.sqrt(math.pi) / 2))
    f = lambda u: u**0.5 * math.exp(-u)  # noqa: E731
    cases.append(("gamma_1.5", lambda spec, f=f: integrate_semi_infinite(f, f, spec), math.gamma(1.5)))
    for p, q in ((-0.5, -0.5), (-0.9, 0.0), (0.3, -0.7), (2.0, 3.0), (-0.2, 1.5), (0.0, -0.95)):
        f = lambda x, xc, p=p, q=q: x[:, 0] ** p * xc[:, 0] ** q  # noqa: E731
        sing = [(p if p < 1 else None, q if q < 1 else None)]
        cases.append((f"beta_{p}_{q}", lambda spec, f=f, sing=sing: integrate_unit_cube(
            f, 1, spec, sing, with_complement=True), beta_fn(p + 1, q + 1)))
    for p1, p2 in ((-0.5, -0.5), (-0.3, 0.7), (1.0, 2.0)):
        f = lambda x, p1=p1, p2=p2: x[:, 0] ** p1 * x[:, 1] ** p2  # noqa: E731
        sing = [(p1 if p1 < 1 else None, None), (p2 if p2 < 1 else None, None)]
        cases.append((f"cube_{p1}_{p2}", lambda spec, f=f, sing=sing: integrate_unit_cube(f, 2, spec, sing),
                      1 / ((p1 + 1) * (p2 + 1))))
    for c, e in (((0.0, 0.0), -0.5), ((-0.5, 0.0), 0.0), ((0.0, 0.0, 0.0), -0.75), ((1.0, 2.0), 0.5)):
        f = lambda t, rest, c=c, e=e: np.prod(t ** np.asarray(c), axis=1) * rest**e  # noqa: E731
        cases.append((f"dirichlet_{len(c)}d_{e}", lambda spec, f=f, c=c, e=e: integrate_simplex(
            f, len(c), spec, face_exponent=e, coord_exponents=c, pass_rest=True), dirichlet_integral(c, e)))
    f = lambda t: np.ones(t.shape[0])  # noqa: E731
    cases.append(("simplex_volume_3", lambda spec, f=f: integrate_simplex(f, 3, spec), 1 / 6))
    return cases


KNOWN = _known_integrals()


def test_error_estimates_bound_actual_error():
    assert len(KNOWN) == 20
    missed = []
    for name, run, exact in KNOWN:
        res = run(QuadSpec())
        # allow for the rounding of the final sum itself
        if abs(res.value - exact) > res.error + 1e-15 * abs(exact):
            missed.append(name)
    assert len(missed) <= 1, missed


@pytest.mark.parametrize("name, run, exact", KNOWN, ids=[c[0] for c in KNOWN])
def test_refinement_moves_less_than_estimate(name, run, exact):
    dim = 1 if name.startswith(("gamma", "half", "beta")) else 2
    coarse = run(QuadSpec())
    with warnings.catch_warnings():
        warnings.simplefilter("error", BudgetExceeded)
        fine = run(QuadSpec(rel_tol=QuadSpec().tolerance(dim) / 10))
    assert abs(fine.value - coarse.value) <= coarse.error + 1e-15 * abs(exact)
