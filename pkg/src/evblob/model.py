"""Core blob model: state container, shape matrix math, event likelihood.

The tracked target is an elliptical Gaussian blob on the image plane. Its
shape is carried as an angle theta plus two principal axis lengths
(lam1, lam2) in pixels, materialized on demand as the square-root
covariance matrix

    Lambda = R(theta) @ diag(lam1, lam2) @ R(theta).T

so the spatial event density around the blob center p is
N(p, Lambda @ Lambda.T).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# State vector layout, shared by every module that touches raw vectors:
#   [px, py, vx, vy, theta, q, lam1, lam2]            dim 8 (flicker)
#   [..., dx, dy]                                     dim 10 (non-flicker)
IDX_P = slice(0, 2)
IDX_V = slice(2, 4)
IDX_THETA = 4
IDX_Q = 5
IDX_LAM = slice(6, 8)
IDX_DELTA = slice(8, 10)

DIM_FLICKER = 8
DIM_NON_FLICKER = 10

# Smallest admissible principal axis, in pixels. Applied after every filter
# update so the shape matrix stays invertible no matter how noisy the
# corrections get.
LAMBDA_FLOOR = 0.1

US_PER_S = 1_000_000


def us_to_seconds(t_us):
    """Convert integer microsecond timestamps to float64 seconds."""
    return np.asarray(t_us, dtype=np.float64) * 1e-6


def seconds_to_us(t_s):
    """Quantize float seconds to integer microseconds (round to nearest)."""
    return np.rint(np.asarray(t_s, dtype=np.float64) * US_PER_S).astype(np.int64)


@dataclass
class Event:
    """One camera event: time in microseconds, pixel position, polarity.

    Sub-pixel positions are allowed (synthetic streams use them).
    """

    t: int
    xi: np.ndarray
    rho: int

    def __post_init__(self):
        self.xi = np.asarray(self.xi, dtype=np.float64)
        if self.rho not in (-1, 1):
            raise ValueError(f"polarity must be +1 or -1, got {self.rho}")


@dataclass
class GyroSample:
    """Angular velocity sample: time in microseconds, omega in rad/s."""

    t: int
    omega: np.ndarray

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=np.float64)


@dataclass
class CameraIntrinsics:
    """Pinhole intrinsics: focal length and principal point, both in pixels."""

    f: float
    principal_point: np.ndarray = field(
        default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        self.principal_point = np.asarray(self.principal_point, dtype=np.float64)
        if not self.f > 0:
            raise ValueError("focal length must be positive")


@dataclass
class TrackState:
    """Filter state of one track.

    p      blob center, pixels
    v      image velocity, pixels/s
    theta  shape orientation, radians, never wrapped
    q      angular rate, rad/s
    lam    principal axes (lam1, lam2), pixels, both > 0
    delta  polarity offset, pixels; present only in non-flickering mode
    """

    p: np.ndarray
    v: np.ndarray
    theta: float
    q: float
    lam: np.ndarray
    delta: np.ndarray | None = None

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=np.float64)
        self.v = np.asarray(self.v, dtype=np.float64)
        self.lam = np.asarray(self.lam, dtype=np.float64)
        if self.delta is not None:
            self.delta = np.asarray(self.delta, dtype=np.float64)
        if not (self.lam > 0).all():
            raise ValueError(f"lam components must be positive, got {self.lam}")

    @property
    def dim(self) -> int:
        return DIM_FLICKER if self.delta is None else DIM_NON_FLICKER

    def to_vector(self) -> np.ndarray:
        x = np.empty(self.dim)
        x[IDX_P] = self.p
        x[IDX_V] = self.v
        x[IDX_THETA] = self.theta
        x[IDX_Q] = self.q
        x[IDX_LAM] = self.lam
        if self.delta is not None:
            x[IDX_DELTA] = self.delta
        return x

    @classmethod
    def from_vector(cls, x: np.ndarray) -> "TrackState":
        x = np.asarray(x, dtype=np.float64)
        if x.shape[0] not in (DIM_FLICKER, DIM_NON_FLICKER):
            raise ValueError(f"state vector must have length 8 or 10, got {x.shape}")
        delta = x[IDX_DELTA].copy() if x.shape[0] == DIM_NON_FLICKER else None
        return cls(p=x[IDX_P].copy(), v=x[IDX_V].copy(),
                   theta=float(x[IDX_THETA]), q=float(x[IDX_Q]),
                   lam=x[IDX_LAM].copy(), delta=delta)


def check_covariance(sigma: np.ndarray, rel_tol: float = 1e-9) -> None:
    """Validate a track covariance: square, symmetric, eigenvalues >= 0.

    Raises ValueError on violation. The eigenvalue floor is relative to the
    trace, matching what the filter enforces after each update.
    """
    sigma = np.asarray(sigma)
    d = sigma.shape[0]
    if sigma.shape != (d, d) or d not in (DIM_FLICKER, DIM_NON_FLICKER):
        raise ValueError(f"covariance must be 8x8 or 10x10, got {sigma.shape}")
    scale = max(np.abs(sigma).max(), 1.0)
    if np.abs(sigma - sigma.T).max() > rel_tol * scale:
        raise ValueError("covariance is not symmetric")
    w = np.linalg.eigvalsh(sigma)
    if w.min() < -rel_tol * np.trace(sigma):
        raise ValueError(f"covariance has negative eigenvalue {w.min()}")


def rot(theta: float) -> np.ndarray:
    """2x2 rotation matrix."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def make_shape_matrix(theta: float, lam) -> np.ndarray:
    """Shape matrix Lambda = R(theta) diag(lam) R(theta).T.

    Symmetric positive-definite with det = lam1 * lam2.
    """
    lam = np.asarray(lam, dtype=np.float64)
    if not (lam > 0).all():
        raise ValueError(f"lam components must be positive, got {lam}")
    r = rot(theta)
    return (r * lam) @ r.T


def shape_inverse(theta: float, lam) -> np.ndarray:
    """Inverse shape matrix, R(theta) diag(1/lam) R(theta).T."""
    lam = np.asarray(lam, dtype=np.float64)
    if not (lam > 0).all():
        raise ValueError(f"lam components must be positive, got {lam}")
    r = rot(theta)
    return (r / lam) @ r.T


def blob_likelihood(xi, state: TrackState) -> float:
    """Spatial event density at pixel xi for the given blob state.

    Gaussian with mean state.p and square-root covariance Lambda; the peak
    value is 1 / (2 pi lam1 lam2).
    """
    w = np.asarray(xi, dtype=np.float64) - state.p
    z = shape_inverse(state.theta, state.lam) @ w
    norm = 2.0 * np.pi * state.lam[0] * state.lam[1]
    return float(np.exp(-0.5 * (z @ z)) / norm)
