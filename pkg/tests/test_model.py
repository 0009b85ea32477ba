"""Shape matrix algebra, state container round trips, event likelihood."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evblob.model import (
    DIM_FLICKER,
    DIM_NON_FLICKER,
    Event,
    TrackState,
    blob_likelihood,
    check_covariance,
    make_shape_matrix,
    rot,
    seconds_to_us,
    shape_inverse,
    us_to_seconds,
)

# Frozen reference values, computed by an independent sympy script with the
# rotation matrix written out longhand.
SHAPE_PI6_41 = np.array([
    [3.2500000000000004, 1.2990381056766578],
    [1.2990381056766578, 1.7499999999999998],
])
SHAPE_INV_11_5_05 = np.array([
    [1.6296510055298115, -0.7276467634376312],
    [-0.7276467634376311, 0.5703489944701888],
])


def test_shape_matrix_matches_frozen_value():
    assert np.allclose(make_shape_matrix(np.pi / 6.0, (4.0, 1.0)),
                       SHAPE_PI6_41, atol=1e-12)


def test_shape_matrix_axis_aligned():
    assert np.allclose(make_shape_matrix(0.0, (2.0, 4.0)), np.diag([2.0, 4.0]))


def test_shape_inverse_axis_aligned():
    assert np.allclose(shape_inverse(0.0, (2.0, 4.0)), np.diag([0.5, 0.25]))


def test_shape_inverse_matches_frozen_value():
    assert np.allclose(shape_inverse(1.1, (5.0, 0.5)),
                       SHAPE_INV_11_5_05, atol=1e-12)


def test_shape_inverse_is_matrix_inverse(rng):
    for _ in range(50):
        theta = rng.uniform(-np.pi, np.pi)
        lam = rng.uniform(0.2, 50.0, 2)
        prod = make_shape_matrix(theta, lam) @ shape_inverse(theta, lam)
        assert np.allclose(prod, np.eye(2), atol=1e-10)


def test_shape_matrix_determinant_is_axis_product(rng):
    for _ in range(50):
        theta = rng.uniform(-np.pi, np.pi)
        lam = rng.uniform(0.2, 50.0, 2)
        assert np.isclose(np.linalg.det(make_shape_matrix(theta, lam)),
                          lam[0] * lam[1])


@settings(max_examples=60, deadline=None)
@given(theta=st.floats(-10.0, 10.0),
       l1=st.floats(0.5, 50.0), l2=st.floats(0.5, 50.0))
def test_shape_matrix_invariant_under_half_turn(theta, l1, l2):
    a = make_shape_matrix(theta, (l1, l2))
    b = make_shape_matrix(theta + np.pi, (l1, l2))
    assert np.allclose(a, b, atol=1e-9 * max(l1, l2))


@settings(max_examples=60, deadline=None)
@given(theta=st.floats(-10.0, 10.0),
       l1=st.floats(0.5, 50.0), l2=st.floats(0.5, 50.0))
def test_shape_matrix_invariant_under_quarter_turn_with_swap(theta, l1, l2):
    a = make_shape_matrix(theta, (l1, l2))
    b = make_shape_matrix(theta + np.pi / 2.0, (l2, l1))
    assert np.allclose(a, b, atol=1e-9 * max(l1, l2))


def test_shape_matrix_rejects_nonpositive_axis():
    with pytest.raises(ValueError):
        make_shape_matrix(0.3, (2.0, 0.0))
    with pytest.raises(ValueError):
        shape_inverse(0.3, (-1.0, 2.0))


def test_rot_is_orthonormal(rng):
    for _ in range(20):
        r = rot(rng.uniform(-10, 10))
        assert np.allclose(r @ r.T, np.eye(2), atol=1e-12)
        assert np.isclose(np.linalg.det(r), 1.0)


# --- likelihood ---


def test_likelihood_peak_value():
    st_ = TrackState(p=(3.0, -2.0), v=(0, 0), theta=0.7, q=0.0, lam=(4.0, 2.5))
    peak = 1.0 / (2.0 * np.pi * 4.0 * 2.5)
    assert np.isclose(blob_likelihood(st_.p, st_), peak, rtol=1e-12)


def test_likelihood_on_unit_mahalanobis_shell(rng):
    # xi = p + Lambda @ eta with |eta| = 1 sits exactly one normalized unit
    # out, so the density is peak * exp(-1/2) regardless of direction.
    st_ = TrackState(p=(10.0, 20.0), v=(0, 0), theta=-1.2, q=0.0, lam=(6.0, 1.5))
    lam_mat = make_shape_matrix(st_.theta, st_.lam)
    peak = 1.0 / (2.0 * np.pi * st_.lam[0] * st_.lam[1])
    for _ in range(10):
        ang = rng.uniform(0, 2 * np.pi)
        eta = np.array([np.cos(ang), np.sin(ang)])
        val = blob_likelihood(st_.p + lam_mat @ eta, st_)
        assert np.isclose(val, peak * np.exp(-0.5), rtol=1e-10)


def test_likelihood_integrates_to_one():
    st_ = TrackState(p=(0.0, 0.0), v=(0, 0), theta=0.4, q=0.0, lam=(3.0, 1.2))
    span = 8.0 * st_.lam.max()
    n = 400
    xs = np.linspace(-span, span, n)
    cell = (xs[1] - xs[0]) ** 2
    total = 0.0
    for x in xs:
        for y in xs:
            total += blob_likelihood((x, y), st_)
    assert abs(total * cell - 1.0) < 0.01


def test_generative_second_moment_matches_shape(rng):
    # Draw xi = p + Lambda @ eta and check the sample covariance recovers
    # Lambda @ Lambda.T within 5% in Frobenius norm at 1e5 samples.
    st_ = TrackState(p=(50.0, 60.0), v=(0, 0), theta=0.9, q=0.0, lam=(5.0, 2.0))
    lam_mat = make_shape_matrix(st_.theta, st_.lam)
    eta = rng.standard_normal((100_000, 2))
    xi = st_.p + eta @ lam_mat.T
    sample_cov = np.cov(xi.T)
    target = lam_mat @ lam_mat.T
    err = np.linalg.norm(sample_cov - target) / np.linalg.norm(target)
    assert err < 0.05


# --- containers and conversions ---


def test_event_polarity_validated():
    Event(t=1000, xi=(1.0, 2.0), rho=1)
    Event(t=1000, xi=(1.0, 2.0), rho=-1)
    with pytest.raises(ValueError):
        Event(t=1000, xi=(1.0, 2.0), rho=0)


def test_track_state_vector_round_trip(rng):
    for dim in (DIM_FLICKER, DIM_NON_FLICKER):
        delta = (0.5, -0.25) if dim == DIM_NON_FLICKER else None
        st_ = TrackState(p=(1, 2), v=(3, 4), theta=5.0, q=6.0, lam=(7, 8),
                         delta=delta)
        assert st_.dim == dim
        back = TrackState.from_vector(st_.to_vector())
        assert np.allclose(back.to_vector(), st_.to_vector())


def test_track_state_rejects_bad_vector_length():
    with pytest.raises(ValueError):
        TrackState.from_vector(np.zeros(9))


def test_track_state_rejects_nonpositive_lam():
    with pytest.raises(ValueError):
        TrackState(p=(0, 0), v=(0, 0), theta=0.0, q=0.0, lam=(1.0, 0.0))


def test_check_covariance_accepts_valid():
    check_covariance(np.diag(np.arange(1.0, 9.0)))


def test_check_covariance_rejects_asymmetric():
    sigma = np.eye(8)
    sigma[0, 1] = 1e-3
    with pytest.raises(ValueError):
        check_covariance(sigma)


def test_check_covariance_rejects_negative_eigenvalue():
    sigma = np.eye(8)
    sigma[7, 7] = -0.5
    with pytest.raises(ValueError):
        check_covariance(sigma)


def test_check_covariance_rejects_bad_dimension():
    with pytest.raises(ValueError):
        check_covariance(np.eye(5))


def test_time_conversions_round_trip():
    t_us = np.array([0, 1, 999_999, 1_000_000, 87_654_321], dtype=np.int64)
    assert np.array_equal(seconds_to_us(us_to_seconds(t_us)), t_us)
    assert us_to_seconds(1_500_000) == 1.5
