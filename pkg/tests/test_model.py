import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sinrpd.errors import DomainError, RangeError
from sinrpd.model import (
    Direction,
    MomentQuery,
    NetworkParams,
    PDParams,
    PropagationSample,
    RatioSample,
    RatioScale,
    Scale,
    hat_transform,
    sinr_stinr_transform,
    sinr_to_stinr,
    stinr_to_sinr,
    unhat_transform,
    validate_network_params,
)

positive = st.floats(min_value=1e-3, max_value=1e3)


def test_default_network_has_a_equal_pi():
    p = validate_network_params({"lambda": 1, "beta": 4, "K": 1, "W": 0, "fading_moment": 1})
    assert p.a == pytest.approx(math.pi, rel=1e-15)
    assert p.alpha == 0.5


@pytest.mark.parametrize(
    "field, value",
    [("beta", 2.0), ("beta", 1.5), ("W", -1.0), ("lam", 0.0), ("K", -2.0), ("fading_moment", 0.0), ("beta", math.inf)],
)
def test_out_of_range_field_is_named(field, value):
    raw = {"lam": 1.0, "beta": 4.0, "K": 1.0, "W": 0.0, "fading_moment": 1.0, field: value}
    with pytest.raises(RangeError) as info:
        validate_network_params(raw)
    assert info.value.field == field


def test_unknown_field_rejected():
    with pytest.raises(RangeError) as info:
        validate_network_params({"beta": 4, "gain": 2})
    assert info.value.field == "gain"


def test_validate_accepts_existing_record():
    p = NetworkParams(lam=2.0, beta=3.0)
    assert validate_network_params(p) == p


@given(positive, positive, positive, st.floats(min_value=0.1, max_value=10))
def test_a_scaling(lam, fm, K, c):
    base = NetworkParams(lam=lam, K=K, fading_moment=fm)
    assert NetworkParams(lam=c * lam, K=K, fading_moment=fm).a == pytest.approx(c * base.a, rel=1e-12)
    assert NetworkParams(lam=lam, K=K, fading_moment=c * fm).a == pytest.approx(c * base.a, rel=1e-12)
    assert NetworkParams(lam=lam, K=c * K, fading_moment=fm).a == pytest.approx(base.a / c**2, rel=1e-12)


def test_from_a_round_trip():
    p = NetworkParams.from_a(2.5, 3.0, W=0.5)
    assert p.a == pytest.approx(2.5, rel=1e-15)
    assert (p.beta, p.W) == (3.0, 0.5)


def test_pd_params_of_network():
    assert NetworkParams(beta=5.0).pd_params() == PDParams(0.4, 0.0)


def test_pd_params_validation():
    PDParams(0.0, 1.0)
    PDParams(0.5, -0.49)
    with pytest.raises(RangeError):
        PDParams(1.0, 0.0)
    with pytest.raises(RangeError):
        PDParams(0.5, -0.5)


@pytest.mark.parametrize("value, expected", [(0.5, 1.0), (0.75, 3.0), (0.9, 9.0)])
def test_stinr_to_sinr_examples(value, expected):
    assert sinr_stinr_transform(value, Direction.STINR_TO_SINR) == pytest.approx(expected, rel=1e-15)
    assert sinr_stinr_transform(expected, "sinr_to_stinr") == pytest.approx(value, rel=1e-15)


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.5, math.nan])
def test_stinr_domain(bad):
    with pytest.raises(DomainError):
        stinr_to_sinr(bad)


@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_sinr_domain(bad):
    with pytest.raises(DomainError):
        sinr_to_stinr(bad)


@given(st.floats(min_value=1e-9, max_value=1 - 1e-9))
def test_transform_round_trip(z):
    back = sinr_to_stinr(stinr_to_sinr(z))
    assert back == pytest.approx(z, rel=4e-16 / min(z, 1 - z) + 1e-15)


def test_transform_is_increasing():
    grid = np.linspace(0.001, 0.999, 999)
    z = stinr_to_sinr(grid)
    assert np.all(np.diff(z) > 0)
    assert np.all(np.diff(sinr_to_stinr(z)) > 0)


def test_hat_transform_examples():
    np.testing.assert_allclose(hat_transform([0.5]), [1.0], rtol=1e-15)
    np.testing.assert_allclose(hat_transform([0.2, 0.3]), [0.4, 0.6], rtol=1e-15)
    with pytest.raises(DomainError):
        hat_transform([0.6, 0.5])
    with pytest.raises(DomainError):
        hat_transform([0.5, 0.5])


@given(st.lists(st.floats(min_value=1e-6, max_value=1.0), min_size=1, max_size=6))
def test_hat_round_trip(raw):
    t = np.asarray(raw) / (np.sum(raw) * 1.25)
    np.testing.assert_allclose(unhat_transform(hat_transform(t)), t, rtol=1e-12)


def test_moment_query_validation():
    q = MomentQuery(2, (0.2, 0.3))
    assert q.in_simplex()
    assert not MomentQuery(2, (0.6, 0.5)).in_simplex()
    with pytest.raises(RangeError):
        MomentQuery(2, (0.2,))
    with pytest.raises(RangeError):
        MomentQuery(1, (1.5,))
    with pytest.raises(RangeError):
        MomentQuery(0, ())
    sinr = MomentQuery(1, (3.0,), Scale.SINR)
    np.testing.assert_allclose(sinr.stinr_thresholds(), [0.75])
    with pytest.raises(RangeError):
        MomentQuery(1, (0.0,), "sinr")


def test_propagation_sample_contract():
    s = PropagationSample([1.0, 4.0, 9.0], total_power=1.5, tail_correction=0.1)
    assert s.stored_power == pytest.approx(1 + 0.25 + 1 / 9)
    with pytest.raises(ValueError):
        s.y[0] = 2.0
    with pytest.raises(ValueError, match="duplicate"):
        PropagationSample([1.0, 1.0], total_power=3.0)
    with pytest.raises(ValueError):
        PropagationSample([1.0, 4.0], total_power=1.0)
    with pytest.raises(ValueError):
        PropagationSample([1.0], total_power=2.0, tail_correction=-1.0)


def test_ratio_sample_contract():
    r = RatioSample([0.5, 0.3, 0.1], RatioScale.STIR, 0.0, tail_mass=0.1)
    assert r.total() == pytest.approx(1.0)
    with pytest.raises(DomainError):
        RatioSample([1.2, 0.1], "stir", 0.0)
    with pytest.raises(ValueError):
        RatioSample([0.1, 0.3], "stir", 0.0)
