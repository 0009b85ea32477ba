"""Event-to-track association and multi-track lifecycle.

Each incoming event is offered to the track whose predicted center is
nearest, provided the distance is inside that track's dynamic threshold
sigma. sigma is a low-pass filtered multiple of the track's own estimated
size, so it tightens as the shape estimate converges and relaxes when
updates stop arriving. Unassociated events are discarded; uniform
background noise therefore barely perturbs the filters.

This module is the plain reference implementation; `evblob.engine` runs the
same pipeline through compiled kernels for long streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import ekf, pseudo_meas
from .config import RunConfig
from .model import CameraIntrinsics, Event, TrackState, us_to_seconds


@dataclass
class DynamicThreshold:
    """Low-pass association gate, in pixels.

    Discrete update over a gap dt with discount exp(-alpha*dt):

        sigma <- discount * sigma + b * (1 - discount) * max(lam)

    so the steady state is b times the largest principal axis.
    """

    sigma: float
    alpha: float
    b: float
    last_t: float

    def __post_init__(self):
        if self.sigma <= 0 or self.alpha <= 0 or self.b < 1:
            raise ValueError("need sigma > 0, alpha > 0, b >= 1")


def threshold_advance(th: DynamicThreshold, t: float, lambda_max: float) -> DynamicThreshold:
    """Advance the gate to time t given the current largest principal axis."""
    if t < th.last_t:
        raise ValueError(f"threshold time going backwards: {t} < {th.last_t}")
    discount = math.exp(-th.alpha * (t - th.last_t))
    sigma = discount * th.sigma + th.b * (1.0 - discount) * lambda_max
    return DynamicThreshold(sigma=sigma, alpha=th.alpha, b=th.b, last_t=t)


@dataclass
class Track:
    id: int
    state: TrackState
    cov: np.ndarray
    buffer: pseudo_meas.ChiBuffer
    threshold: DynamicThreshold
    last_t: float                  # time of the last accepted update, seconds
    lost: bool = False
    matched: int = 0
    rejected: int = 0

    def predicted_center(self, t: float, omega, intrinsics) -> np.ndarray:
        """Coast the center to time t for the association distance check."""
        dt = t - self.last_t
        vel = self.state.v
        if omega is not None:
            vel = vel + ekf.ego_motion_flow(self.state.p, omega, intrinsics)
        return self.state.p + vel * dt


@dataclass
class TrackSet:
    """All tracks of one run plus stream-level counters."""

    config: RunConfig
    intrinsics: CameraIntrinsics
    tracks: list = field(default_factory=list)
    next_id: int = 0
    events_seen: int = 0
    events_matched: int = 0
    events_rejected: int = 0
    events_out_of_order: int = 0
    last_stream_t: float = -math.inf
    _noise: object = None

    def process_noise(self) -> ekf.ProcessNoise:
        if self._noise is None:
            cfg = self.config
            self._noise = ekf.ProcessNoise(
                qp=cfg.qp, qv=cfg.qv, qtheta=cfg.qtheta,
                qq=cfg.qq, qlambda=cfg.qlambda, qdelta=cfg.qdelta)
        return self._noise

    def alive(self):
        return [tr for tr in self.tracks if not tr.lost]

    def by_id(self, track_id: int) -> Track:
        for tr in self.tracks:
            if tr.id == track_id:
                return tr
        raise KeyError(track_id)


def init_track(tracks: TrackSet, seed, t: float) -> int:
    """Start a track at the seed position with the configured priors."""
    cfg = tracks.config
    seed = np.asarray(seed, dtype=np.float64)
    if cfg.sensor_width > 0 and not (
            0 <= seed[0] < cfg.sensor_width and 0 <= seed[1] < cfg.sensor_height):
        raise ValueError(f"seed {seed} outside sensor bounds")
    lam0 = cfg.init_lambda_vec()
    delta0 = np.zeros(2) if cfg.mode == "non_flicker" else None
    state = TrackState(p=seed.copy(), v=np.zeros(2), theta=0.0, q=0.0,
                       lam=lam0, delta=delta0)
    track = Track(
        id=tracks.next_id,
        state=state,
        cov=np.diag(cfg.prior_diag()),
        buffer=pseudo_meas.ChiBuffer(cfg.n_buffer, cfg.beta_bound),
        threshold=DynamicThreshold(sigma=cfg.b * float(lam0.max()),
                                   alpha=cfg.alpha, b=cfg.b, last_t=t),
        last_t=t,
    )
    tracks.tracks.append(track)
    tracks.next_id += 1
    return track.id


def associate(event: Event, tracks: TrackSet, omega=None):
    """Nearest live track whose gate contains the event, or None.

    Ties at exactly equal distance go to the lower track id (the scan is in
    id order and only a strictly smaller distance displaces the candidate).
    """
    t = us_to_seconds(event.t)
    best = None
    best_dist = math.inf
    for tr in tracks.tracks:
        if tr.lost:
            continue
        pc = tr.predicted_center(t, omega, tracks.intrinsics)
        dist = math.hypot(event.xi[0] - pc[0], event.xi[1] - pc[1])
        if dist < tr.threshold.sigma and dist < best_dist:
            best = tr
            best_dist = dist
    return best.id if best is not None else None


def process_event(event: Event, tracks: TrackSet, gyro: ekf.GyroHold | None,
                  intrinsics: CameraIntrinsics, config: RunConfig):
    """Run one event through the full pipeline.

    associate -> predict -> update -> append buffer -> advance threshold.
    Returns an output record dict for a matched event, else None. Also
    sweeps the lost-track timeout.
    """
    t = float(us_to_seconds(event.t))
    if t < tracks.last_stream_t:
        if config.out_of_order == "abort":
            raise ValueError(f"out-of-order event at t={event.t} us")
        tracks.events_out_of_order += 1
        return None
    tracks.last_stream_t = t
    tracks.events_seen += 1

    for tr in tracks.alive():
        if t - tr.last_t > config.lost_timeout:
            tr.lost = True

    omega = gyro.at(t) if gyro is not None and not gyro.empty else None
    track_id = associate(event, tracks, omega)
    if track_id is None:
        return None
    tr = tracks.by_id(track_id)

    om = omega if omega is not None else np.zeros(3)
    pred = ekf.predict(tr.state, tr.cov, tracks.process_noise(), om, intrinsics,
                       dt=t - tr.last_t, t=t)
    state, cov, accepted = ekf.update(pred, event, tr.buffer, config.mode)
    if not accepted:
        tr.rejected += 1
        tracks.events_rejected += 1
        return None

    tr.buffer.append(pred.x_minus.p, pred.x_minus.theta, event.xi, event.rho)
    tr.state = state
    tr.cov = cov
    tr.threshold = threshold_advance(tr.threshold, t, float(state.lam.max()))
    tr.last_t = t
    tr.matched += 1
    tracks.events_matched += 1

    return {
        "t_us": int(event.t),
        "track_id": tr.id,
        "state": state.to_vector(),
        "var_diag": np.diag(cov).copy(),
    }
