"""Shared helpers: finite-difference Jacobians and random filter states.

The random-state ranges match the regimes the filter is expected to handle:
principal axes between 1 and 50 px, any orientation, events up to four blob
radii from the center.
"""

import numpy as np
import pytest

from evblob.model import TrackState
from evblob.pseudo_meas import ChiBuffer


def fd_jacobian(fn, x, eps=1e-6):
    """Central-difference Jacobian of fn: R^n -> R^m at x.

    Steps are scaled by the coordinate magnitude so wildly different state
    scales (pixels vs radians vs px/s) all get a sensible perturbation.
    """
    x = np.asarray(x, dtype=np.float64)
    y0 = np.atleast_1d(np.asarray(fn(x), dtype=np.float64))
    jac = np.empty((y0.size, x.size))
    for i in range(x.size):
        h = eps * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        yp = np.atleast_1d(np.asarray(fn(xp), dtype=np.float64))
        ym = np.atleast_1d(np.asarray(fn(xm), dtype=np.float64))
        jac[:, i] = (yp - ym) / (2.0 * h)
    return jac


def matrix_close(a, b, rel_tol):
    """Entrywise comparison scaled by the larger matrix magnitude."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = max(np.abs(a).max(), np.abs(b).max(), 1.0)
    return np.abs(a - b).max() <= rel_tol * scale


def random_state(rng, dim=8):
    """Random filter state with lam in [1, 50] px and theta in [-pi, pi]."""
    delta = rng.uniform(-3.0, 3.0, 2) if dim == 10 else None
    return TrackState(
        p=rng.uniform(-200.0, 200.0, 2),
        v=rng.uniform(-500.0, 500.0, 2),
        theta=rng.uniform(-np.pi, np.pi),
        q=rng.uniform(-20.0, 20.0),
        lam=rng.uniform(1.0, 50.0, 2),
        delta=delta,
    )


def random_event_near(rng, state, max_radii=4.0):
    """Event position within max_radii * max(lam) of the blob center."""
    radius = rng.uniform(0.0, max_radii * float(state.lam.max()))
    ang = rng.uniform(0.0, 2.0 * np.pi)
    xi = state.p + radius * np.array([np.cos(ang), np.sin(ang)])
    rho = 1 if rng.random() < 0.5 else -1
    return xi, rho


def warmed_buffer(rng, state, mode="flicker", n=8, beta=1e-2):
    """Buffer filled with plausible records near the given state."""
    buf = ChiBuffer(n, beta)
    for _ in range(n):
        xi, rho = random_event_near(rng, state, max_radii=2.0)
        p_minus = state.p + rng.normal(0.0, 0.3, 2)
        theta_minus = state.theta + rng.normal(0.0, 0.05)
        buf.append(p_minus, theta_minus, xi, rho)
    return buf


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
