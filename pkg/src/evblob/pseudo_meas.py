"""Two-stage pseudo-measurement stack and its analytic Jacobians.

Real events carry no direct measurement of the blob state, so the filter
manufactures two:

* the normalized position residual ``H = Lambda^-1 (xi - p)``, declared to
  be zero-mean with unit covariance (first stage), and
* the shape statistic ``G``, the squared norms of the last n normalized
  residuals evaluated against buffered predictions, declared to be
  chi-squared with 2n degrees of freedom, approximated N(2n, 4n)
  (second stage).

G deliberately never reads the current event: it is a function of the past
events only, which is what makes its noise approximately independent of the
H row. The buffer therefore stores, for each past event, the PRE-update
predicted center and orientation together with the event itself, and the
record for event k is appended only after the update for event k has run.
"""

from __future__ import annotations

import numpy as np

from .model import (
    DIM_NON_FLICKER,
    IDX_DELTA,
    IDX_LAM,
    IDX_P,
    IDX_THETA,
    TrackState,
    rot,
    shape_inverse,
)

#: Generator of 2D rotations: d/dtheta R(theta) = R(theta) @ OMEGA_GEN.
OMEGA_GEN = np.array([[0.0, -1.0], [1.0, 0.0]])


class ChiBuffer:
    """Ring buffer of the last n pre-update predictions and their events.

    Each record holds (p_minus, theta_minus, xi, rho). Entries are exposed
    newest-first, so index j=0 corresponds to the j=1 "one event ago" slot.
    beta_bound is the configured over-bound on the prediction uncertainty
    that widens the declared chi noise, shared by every term.
    """

    def __init__(self, n: int, beta_bound: float = 1e-2):
        if not 2 <= n <= 64:
            raise ValueError(f"buffer length must be in [2, 64], got {n}")
        if beta_bound < 0:
            raise ValueError("beta_bound must be nonnegative")
        self.n = n
        self.beta_bound = float(beta_bound)
        self._p = np.zeros((n, 2))
        self._theta = np.zeros(n)
        self._xi = np.zeros((n, 2))
        self._rho = np.zeros(n)
        self._head = 0      # slot that the NEXT append overwrites
        self._count = 0

    @property
    def warmed_up(self) -> bool:
        return self._count == self.n

    def __len__(self) -> int:
        return self._count

    def append(self, p_minus, theta_minus: float, xi, rho: int) -> None:
        self._p[self._head] = p_minus
        self._theta[self._head] = theta_minus
        self._xi[self._head] = xi
        self._rho[self._head] = rho
        self._head = (self._head + 1) % self.n
        self._count = min(self._count + 1, self.n)

    def newest_first(self):
        """Arrays (p_minus, theta_minus, xi, rho) ordered newest to oldest."""
        idx = (self._head - 1 - np.arange(self._count)) % self.n
        return self._p[idx], self._theta[idx], self._xi[idx], self._rho[idx]

    def copy(self) -> "ChiBuffer":
        out = ChiBuffer(self.n, self.beta_bound)
        out._p[:] = self._p
        out._theta[:] = self._theta
        out._xi[:] = self._xi
        out._rho[:] = self._rho
        out._head = self._head
        out._count = self._count
        return out


def h_residual(state: TrackState, xi, rho: int, mode: str = "flicker") -> np.ndarray:
    """Normalized position residual Lambda^-1 (xi - p).

    In non-flickering mode the event is first pulled back by its polarity
    offset: Lambda^-1 (xi - rho*delta - p). The pseudo measurement target is
    zero, so the filter's innovation is the negative of this value.
    """
    w = np.asarray(xi, dtype=np.float64) - state.p
    if mode == "non_flicker":
        w = w - rho * state.delta
    return shape_inverse(state.theta, state.lam) @ w


def chi_term(p_minus, theta_minus: float, xi, rho, state: TrackState,
             beta_bound: float, mode: str = "flicker") -> np.ndarray:
    """One buffered normalized residual.

    The shape matrix mixes the CURRENT principal axes (and polarity offset)
    with the BUFFERED orientation and center:

        chi = (1/(1+beta)) * [R(th-) diag(lam_k) R(-th-)]^-1 (xi - p-)

    which is what makes G sensitive to lam_k while its other derivatives
    vanish.
    """
    w = np.asarray(xi, dtype=np.float64) - np.asarray(p_minus, dtype=np.float64)
    if mode == "non_flicker":
        w = w - rho * state.delta
    z = shape_inverse(theta_minus, state.lam) @ w
    return z / (1.0 + beta_bound)


def g_statistic(state: TrackState, buffer: ChiBuffer, mode: str = "flicker") -> float:
    """Sum of squared buffered residuals, ~ N(2n, 4n) at the true state."""
    if not buffer.warmed_up:
        raise ValueError("chi buffer not warmed up; G undefined")
    total = 0.0
    p_m, th_m, xi_m, rho_m = buffer.newest_first()
    for j in range(buffer.n):
        chi = chi_term(p_m[j], th_m[j], xi_m[j], rho_m[j], state,
                       buffer.beta_bound, mode)
        total += chi @ chi
    return float(total)


def jacobian_H(state: TrackState, xi, rho: int, mode: str = "flicker") -> np.ndarray:
    """2 x d Jacobian of h_residual with respect to the full state.

    Nonzero blocks: position (-Lambda^-1), orientation, principal axes, and
    in non-flickering mode the offset (-rho * Lambda^-1). Velocity and
    angular rate never enter H.
    """
    d = state.dim
    out = np.zeros((2, d))
    r = rot(state.theta)
    lam_inv = shape_inverse(state.theta, state.lam)
    w = np.asarray(xi, dtype=np.float64) - state.p
    if mode == "non_flicker":
        w = w - rho * state.delta

    out[:, IDX_P] = -lam_inv
    # d(Lambda^-1)/dtheta = R (OMEGA M - M OMEGA) R^T with M = diag(1/lam)
    m = np.diag(1.0 / state.lam)
    out[:, IDX_THETA] = r @ (OMEGA_GEN @ m - m @ OMEGA_GEN) @ r.T @ w
    # column i of the lam block: -(u_i / lam_i^2) R e_i, u = R^T w
    u = r.T @ w
    out[:, IDX_LAM] = -r * (u / state.lam**2)
    if mode == "non_flicker":
        out[:, IDX_DELTA] = -rho * lam_inv
    return out


def jacobian_G(state: TrackState, buffer: ChiBuffer, mode: str = "flicker") -> np.ndarray:
    """1 x d Jacobian of g_statistic; only the lam block is nonzero.

    dG/dlam_i = -(2/(1+beta)) * sum_j chi_j^T R(th_j) e_i u_{j,i} / lam_i^2
    with u_j the buffered residual rotated into the blob frame. G never
    reads the current theta, so its theta derivative is exactly zero; the
    offset column is declared zero as well (the chi terms' delta dependence
    averages out at a converged state and is not fed back).
    """
    if not buffer.warmed_up:
        raise ValueError("chi buffer not warmed up; G undefined")
    d = state.dim
    out = np.zeros((1, d))
    beta = buffer.beta_bound
    lam2 = state.lam**2
    p_m, th_m, xi_m, rho_m = buffer.newest_first()
    acc = np.zeros(2)
    for j in range(buffer.n):
        w = xi_m[j] - p_m[j]
        if mode == "non_flicker":
            w = w - rho_m[j] * state.delta
        r = rot(th_m[j])
        u = r.T @ w
        chi = (r / state.lam) @ u / (1.0 + beta)
        # zeta_j as a row over the two axes
        acc += (chi @ r) * (u / lam2)
    out[0, IDX_LAM] = -(2.0 / (1.0 + beta)) * acc
    return out


def measurement_noise(n: int) -> np.ndarray:
    """Declared noise of the stacked measurement: diag(1, 1, 4n)."""
    return np.diag([1.0, 1.0, 4.0 * n])


def stack_measurement(state: TrackState, event, buffer: ChiBuffer,
                      mode: str = "flicker"):
    """Stacked prediction, Jacobian, and noise for the 3-dim update.

    Returns (predicted, C, R) where predicted = (H; G) at the prediction,
    the target the filter compares against is (0, 0, 2n), and
    R = diag(1, 1, 4n).
    """
    h = h_residual(state, event.xi, event.rho, mode)
    g = g_statistic(state, buffer, mode)
    predicted = np.array([h[0], h[1], g])
    c_mat = np.vstack([
        jacobian_H(state, event.xi, event.rho, mode),
        jacobian_G(state, buffer, mode),
    ])
    return predicted, c_mat, measurement_noise(buffer.n)
