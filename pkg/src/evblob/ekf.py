"""Per-event extended Kalman filter: prediction and correction.

Prediction integrates the blob's stochastic motion model over the gap since
the previous event with a single first-order Euler step (event gaps are tens
of microseconds, so one step is plenty). The correction consumes the stacked
pseudo-measurement from :mod:`evblob.pseudo_meas`.

The camera's own rotation moves every pixel; when a gyro stream is present
its angular velocity enters the prediction through the pinhole flow field
``ego_motion_flow`` and its linearization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    DIM_FLICKER,
    DIM_NON_FLICKER,
    IDX_DELTA,
    IDX_LAM,
    IDX_P,
    IDX_Q,
    IDX_THETA,
    IDX_V,
    LAMBDA_FLOOR,
    CameraIntrinsics,
    Event,
    TrackState,
)
from . import pseudo_meas


def ego_motion_flow(p, omega, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Image velocity induced at pixel p by camera angular velocity omega.

    Pinhole model with focal length f and principal point p0; with
    pbar = p - p0 and omega = (wx, wy, wz):

        u = wx*pbar_x*pbar_y/f - wy*(f + pbar_x**2/f) + wz*pbar_y
        w = wx*(f + pbar_y**2/f) - wy*pbar_x*pbar_y/f - wz*pbar_x
    """
    px, py = np.asarray(p, dtype=np.float64) - intrinsics.principal_point
    wx, wy, wz = omega
    f = intrinsics.f
    return np.array([
        wx * px * py / f - wy * (f + px * px / f) + wz * py,
        wx * (f + py * py / f) - wy * px * py / f - wz * px,
    ])


def ego_motion_jacobian(p_hat, omega, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Derivative of ego_motion_flow with respect to the pixel position."""
    px, py = np.asarray(p_hat, dtype=np.float64) - intrinsics.principal_point
    wx, wy, wz = omega
    f = intrinsics.f
    return np.array([
        [(py * wx - 2.0 * px * wy) / f, wz + px * wx / f],
        [-wz - py * wy / f, (2.0 * py * wx - px * wy) / f],
    ])


def spin_matrix(omega_z: float) -> np.ndarray:
    """In-plane rotation generator J = [[0, wz], [-wz, 0]]."""
    return np.array([[0.0, omega_z], [-omega_z, 0.0]])


def assemble_A(p_hat, omega, intrinsics: CameraIntrinsics, dim: int) -> np.ndarray:
    """Drift Jacobian of the state ODE, evaluated at the current estimate.

    Block layout over [p, v, theta, q, lam, (delta)]:
    the p rows carry the flow linearization and the identity coupling to v,
    the v block and (in 10-dim mode) the delta block carry the spin matrix J,
    theta couples to q with a 1, and everything else is zero.
    """
    if dim not in (DIM_FLICKER, DIM_NON_FLICKER):
        raise ValueError(f"state dimension must be 8 or 10, got {dim}")
    a = np.zeros((dim, dim))
    a[IDX_P, IDX_P] = ego_motion_jacobian(p_hat, omega, intrinsics)
    a[IDX_P, IDX_V] = np.eye(2)
    j = spin_matrix(omega[2])
    a[IDX_V, IDX_V] = j
    a[IDX_THETA, IDX_Q] = 1.0
    if dim == DIM_NON_FLICKER:
        a[IDX_DELTA, IDX_DELTA] = j
    return a


def _as_block(value) -> np.ndarray:
    """Accept a scalar, length-2 diagonal, or full 2x2 noise block."""
    value = np.asarray(value, dtype=np.float64)
    if value.ndim == 0:
        return np.eye(2) * value
    if value.shape == (2,):
        return np.diag(value)
    if value.shape == (2, 2):
        return value
    raise ValueError(f"noise block must be scalar, 2-vector, or 2x2, got {value.shape}")


@dataclass
class ProcessNoise:
    """Continuous-time process noise intensities (per second).

    Blocks may be given as scalars (isotropic), length-2 diagonals, or full
    2x2 matrices. qdelta only matters in non-flickering mode. The assembled
    matrix is cached per dimension; mutate fields only before first use.
    """

    qp: object = 1.0
    qv: object = 1e4
    qtheta: float = 1.0
    qq: float = 100.0
    qlambda: object = 10.0
    qdelta: object = 10.0

    def as_matrix(self, dim: int) -> np.ndarray:
        cache = self.__dict__.setdefault("_cache", {})
        if dim not in cache:
            q = np.zeros((dim, dim))
            q[IDX_P, IDX_P] = _as_block(self.qp)
            q[IDX_V, IDX_V] = _as_block(self.qv)
            q[IDX_THETA, IDX_THETA] = self.qtheta
            q[IDX_Q, IDX_Q] = self.qq
            q[IDX_LAM, IDX_LAM] = _as_block(self.qlambda)
            if dim == DIM_NON_FLICKER:
                q[IDX_DELTA, IDX_DELTA] = _as_block(self.qdelta)
            eigs = np.linalg.eigvalsh(q)
            if eigs.min() < 0:
                raise ValueError("process noise assembly is not positive semidefinite")
            cache[dim] = q
        return cache[dim]


@dataclass
class PredictedState:
    """Prediction (x_minus, sigma_minus) at event time t (seconds)."""

    x_minus: TrackState
    sigma_minus: np.ndarray
    t: float


def predict(state: TrackState, cov: np.ndarray, noise: ProcessNoise,
            omega, intrinsics: CameraIntrinsics, dt: float,
            t: float = np.nan) -> PredictedState:
    """Euler-integrate state and covariance over the inter-event gap dt.

    The mean propagation keeps the full drift, including the parts a purely
    linear map would drop: p picks up (v + ego_motion_flow(p)) * dt and
    theta picks up (q - wz) * dt. The covariance uses the linearized
    transition F = I + dt*A with the per-second noise scaled by dt.
    """
    if dt < 0:
        raise ValueError(f"negative time step {dt}; events must be processed in order")
    omega = np.asarray(omega, dtype=np.float64)
    d = state.dim
    x = state.to_vector()

    xm = x.copy()
    xm[IDX_P] = x[IDX_P] + (x[IDX_V] + ego_motion_flow(x[IDX_P], omega, intrinsics)) * dt
    j = spin_matrix(omega[2])
    xm[IDX_V] = x[IDX_V] + dt * (j @ x[IDX_V])
    xm[IDX_THETA] = x[IDX_THETA] + (x[IDX_Q] - omega[2]) * dt
    if d == DIM_NON_FLICKER:
        xm[IDX_DELTA] = x[IDX_DELTA] + dt * (j @ x[IDX_DELTA])

    f_mat = np.eye(d) + dt * assemble_A(x[IDX_P], omega, intrinsics, d)
    sigma_m = f_mat @ cov @ f_mat.T + dt * noise.as_matrix(d)

    return PredictedState(x_minus=TrackState.from_vector(xm),
                          sigma_minus=sigma_m, t=t)


def update(pred: PredictedState, event: Event, chi_buffer,
           mode: str | None = None):
    """EKF correction against the stacked pseudo-measurement.

    Returns ``(state, cov, accepted)``. While the chi buffer is still
    warming up only the normalized position residual row is used (2-dim
    measurement with unit noise); once the buffer is full the 3-dim stack
    with the shape statistic row is applied. A numerically singular
    innovation matrix skips the correction and reports accepted=False.
    """
    state = pred.x_minus
    if mode is None:
        mode = "non_flicker" if state.dim == DIM_NON_FLICKER else "flicker"
    sigma = pred.sigma_minus
    d = state.dim
    xi, rho = event.xi, event.rho

    if chi_buffer is not None and chi_buffer.warmed_up:
        predicted, c_mat, r_mat = pseudo_meas.stack_measurement(
            state, event, chi_buffer, mode)
        target = np.array([0.0, 0.0, 2.0 * chi_buffer.n])
    else:
        predicted = pseudo_meas.h_residual(state, xi, rho, mode)
        c_mat = pseudo_meas.jacobian_H(state, xi, rho, mode)
        r_mat = np.eye(2)
        target = np.zeros(2)

    innov = target - predicted
    s_mat = c_mat @ sigma @ c_mat.T + r_mat
    try:
        k_gain = np.linalg.solve(s_mat, c_mat @ sigma).T
    except np.linalg.LinAlgError:
        return state, sigma, False
    if not np.isfinite(k_gain).all():
        return state, sigma, False

    x_new = state.to_vector() + k_gain @ innov
    x_new[IDX_LAM] = np.maximum(x_new[IDX_LAM], LAMBDA_FLOOR)

    # Joseph form keeps the covariance positive semidefinite over millions
    # of tiny corrections; the explicit symmetrization kills the residual
    # floating-point skew.
    b_mat = np.eye(d) - k_gain @ c_mat
    sigma_new = b_mat @ sigma @ b_mat.T + k_gain @ r_mat @ k_gain.T
    sigma_new = 0.5 * (sigma_new + sigma_new.T)

    return TrackState.from_vector(x_new), sigma_new, True


class GyroHold:
    """Zero-order-hold access to a gyro stream.

    ``at(t)`` returns the most recent sample at or before t (zeros before
    the first sample or for an empty stream). Sequential access advances an
    internal cursor; timestamps must be queried in non-decreasing order.
    """

    def __init__(self, t_s=None, omega=None):
        if t_s is None:
            t_s = np.empty(0)
            omega = np.empty((0, 3))
        self.t = np.asarray(t_s, dtype=np.float64)
        self.omega = np.asarray(omega, dtype=np.float64).reshape(-1, 3)
        if self.t.shape[0] != self.omega.shape[0]:
            raise ValueError("gyro timestamp and omega arrays disagree in length")
        self._cursor = -1

    @property
    def empty(self) -> bool:
        return self.t.shape[0] == 0

    def at(self, t: float) -> np.ndarray:
        while (self._cursor + 1 < self.t.shape[0]
               and self.t[self._cursor + 1] <= t):
            self._cursor += 1
        if self._cursor < 0:
            return np.zeros(3)
        return self.omega[self._cursor]

    def reset(self):
        self._cursor = -1
