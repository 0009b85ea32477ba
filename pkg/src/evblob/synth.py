"""Synthetic event and gyro streams with exact ground truth.

Events are drawn from the same generative model the tracker assumes: event
times follow an inhomogeneous Poisson process with the blob's rate, and
each event lands at xi = p(t) + Lambda(t) @ eta with eta ~ N(0, I). A
scenario bundles one or more scripted blob trajectories, an optional gyro
signal, and a uniform background noise rate.

Generation is chunked in fixed one-second windows, each driven by its own
child of the scenario seed, so streams of any length are reproducible
bit-for-bit and never need more memory than one chunk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import CameraIntrinsics, seconds_to_us

CHUNK_SECONDS = 1.0
GYRO_RATE_HZ = 1000.0
TRUTH_RATE_HZ = 1000.0

# Seed-stream tags so blob, background, and chunk child generators never
# collide.
_BLOB_TAG = 1
_BACKGROUND_TAG = 2


@dataclass
class NonFlicker:
    """Polarity model of a target that only fires through motion.

    Events split into a leading and a trailing population offset by
    +-delta_true from the center; polarity follows the side, the contrast,
    and whether the offset points along the velocity.
    """

    delta_true: np.ndarray
    contrast: str = "bright_on_dark"

    def __post_init__(self):
        self.delta_true = np.asarray(self.delta_true, dtype=np.float64)
        if self.contrast not in ("bright_on_dark", "dark_on_bright"):
            raise ValueError(f"unknown contrast {self.contrast!r}")


@dataclass
class Blob:
    """One target: a trajectory sampler plus its event rate and polarity.

    trajectory(t: array) must return a dict with arrays p (N,2), v (N,2),
    theta (N,), q (N,), lam (N,2). rate may be a constant or a callable of
    time returning events/s.
    """

    trajectory: object
    rate: object = 10_000.0
    polarity: object = "flicker"   # "flicker" or a NonFlicker instance


@dataclass
class Scenario:
    blobs: list
    duration: float
    sensor: tuple = (1280, 720)
    seed: int = 0
    background_rate: float = 0.0   # events/s over the whole sensor
    gyro_fn: object = None         # callable t -> (N,3) rad/s, or None
    intrinsics: CameraIntrinsics | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.sensor[0] <= 0 or self.sensor[1] <= 0:
            raise ValueError("sensor area must be positive")
        if self.duration <= 0:
            raise ValueError("duration must be positive")


@dataclass
class EventStream:
    """Column arrays of one event stream, time-sorted."""

    t_us: np.ndarray
    xy: np.ndarray
    rho: np.ndarray

    def __len__(self):
        return self.t_us.shape[0]

    @classmethod
    def empty(cls):
        return cls(np.empty(0, dtype=np.int64), np.empty((0, 2)),
                   np.empty(0, dtype=np.int8))

    @classmethod
    def concat(cls, parts):
        parts = [p for p in parts if len(p)]
        if not parts:
            return cls.empty()
        return cls(np.concatenate([p.t_us for p in parts]),
                   np.concatenate([p.xy for p in parts]),
                   np.concatenate([p.rho for p in parts]))


@dataclass
class GyroStream:
    t_us: np.ndarray
    omega: np.ndarray

    def __len__(self):
        return self.t_us.shape[0]


@dataclass
class TruthTrace:
    """Ground truth of one blob sampled on a regular grid."""

    t_us: np.ndarray
    p: np.ndarray
    v: np.ndarray
    theta: np.ndarray
    q: np.ndarray
    lam: np.ndarray


def _rate_at(rate, t: np.ndarray) -> np.ndarray:
    if callable(rate):
        return np.asarray(rate(t), dtype=np.float64)
    return np.full(t.shape, float(rate))


def _poisson_times(rng, rate, t0: float, t1: float) -> np.ndarray:
    """Inhomogeneous Poisson arrival times on [t0, t1) by thinning.

    The rate bound comes from a dense scan of the window, padded 5%; for
    constant rates thinning accepts everything and the draw is exact.
    """
    span = t1 - t0
    grid = np.linspace(t0, t1, 257)
    bound = float(_rate_at(rate, grid).max())
    if bound <= 0.0:
        return np.empty(0)
    bound *= 1.05
    count = rng.poisson(bound * span)
    times = np.sort(t0 + rng.random(count) * span)
    accept = rng.random(count) * bound < _rate_at(rate, times)
    return times[accept]


def _shape_transform(theta: np.ndarray, lam: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """Apply Lambda(t) = R diag(lam) R^T to each row of eta."""
    c, s = np.cos(theta), np.sin(theta)
    # rotate eta by -theta, scale by lam, rotate back
    u0 = c * eta[:, 0] + s * eta[:, 1]
    u1 = -s * eta[:, 0] + c * eta[:, 1]
    u0 *= lam[:, 0]
    u1 *= lam[:, 1]
    return np.column_stack([c * u0 - s * u1, s * u0 + c * u1])


def _blob_chunk(blob: Blob, rng, t0: float, t1: float):
    times = _poisson_times(rng, blob.rate, t0, t1)
    if times.size == 0:
        return times, np.empty((0, 2)), np.empty(0, dtype=np.int8)
    truth = blob.trajectory(times)
    eta = rng.standard_normal((times.size, 2))
    xy = truth["p"] + _shape_transform(truth["theta"], truth["lam"], eta)
    if isinstance(blob.polarity, NonFlicker):
        side = rng.integers(0, 2, times.size) * 2 - 1
        xy = xy + side[:, None] * blob.polarity.delta_true
        along = truth["v"] @ blob.polarity.delta_true
        lead = np.where(along >= 0, 1, -1)
        contrast = 1 if blob.polarity.contrast == "bright_on_dark" else -1
        rho = (contrast * side * lead).astype(np.int8)
    else:
        rho = (rng.integers(0, 2, times.size) * 2 - 1).astype(np.int8)
    return times, xy, rho


def iter_chunks(scenario: Scenario, chunk_seconds: float = CHUNK_SECONDS):
    """Yield the event stream one time window at a time.

    Concatenating the chunks gives exactly what :func:`generate` returns;
    the split exists so arbitrarily long streams can be produced and
    consumed with bounded memory.
    """
    n_chunks = max(1, math.ceil(scenario.duration / chunk_seconds))
    w, h = scenario.sensor
    for ci in range(n_chunks):
        t0 = ci * chunk_seconds
        t1 = min(scenario.duration, t0 + chunk_seconds)
        if t1 <= t0:
            continue
        parts_t, parts_xy, parts_rho = [], [], []
        for bi, blob in enumerate(scenario.blobs):
            rng = np.random.default_rng([scenario.seed, _BLOB_TAG, bi, ci])
            times, xy, rho = _blob_chunk(blob, rng, t0, t1)
            parts_t.append(times)
            parts_xy.append(xy)
            parts_rho.append(rho)
        if scenario.background_rate > 0:
            rng = np.random.default_rng([scenario.seed, _BACKGROUND_TAG, ci])
            times = _poisson_times(rng, scenario.background_rate, t0, t1)
            xy = np.column_stack([rng.random(times.size) * w,
                                  rng.random(times.size) * h])
            rho = (rng.integers(0, 2, times.size) * 2 - 1).astype(np.int8)
            parts_t.append(times)
            parts_xy.append(xy)
            parts_rho.append(rho)
        t_all = np.concatenate(parts_t) if parts_t else np.empty(0)
        if t_all.size == 0:
            yield EventStream.empty()
            continue
        t_us = seconds_to_us(t_all)
        order = np.argsort(t_us, kind="stable")
        yield EventStream(t_us=t_us[order],
                          xy=np.concatenate(parts_xy)[order],
                          rho=np.concatenate(parts_rho)[order])


def sample_truth(scenario: Scenario, rate_hz: float = TRUTH_RATE_HZ):
    """Ground-truth traces for every blob on a regular grid."""
    n = int(round(scenario.duration * rate_hz))
    t = np.linspace(0.0, scenario.duration, n + 1)
    traces = []
    for blob in scenario.blobs:
        tr = blob.trajectory(t)
        traces.append(TruthTrace(t_us=seconds_to_us(t), p=tr["p"], v=tr["v"],
                                 theta=tr["theta"], q=tr["q"], lam=tr["lam"]))
    return traces


def sample_gyro(scenario: Scenario, rate_hz: float = GYRO_RATE_HZ):
    if scenario.gyro_fn is None:
        return None
    n = int(round(scenario.duration * rate_hz))
    t = np.linspace(0.0, scenario.duration, n + 1)
    omega = np.asarray(scenario.gyro_fn(t), dtype=np.float64).reshape(-1, 3)
    return GyroStream(t_us=seconds_to_us(t), omega=omega)


def generate(scenario: Scenario):
    """Full draw of one scenario: (events, gyro or None, truth traces)."""
    events = EventStream.concat(list(iter_chunks(scenario)))
    return events, sample_gyro(scenario), sample_truth(scenario)


# ---------------------------------------------------------------------------
# scenario builders


def _const_blob_fields(t, theta, q, lam):
    t = np.asarray(t, dtype=np.float64)
    return {
        "theta": np.full(t.shape, theta) + q * t,
        "q": np.full(t.shape, q),
        "lam": np.broadcast_to(np.asarray(lam, dtype=np.float64),
                               (t.shape[0], 2)).copy(),
    }


def linear_scenario(p0, v, lam=(5.0, 5.0), theta=0.0, q=0.0, rate=10_000.0,
                    duration=2.0, polarity="flicker", background_rate=0.0,
                    sensor=(1280, 720), seed=0) -> Scenario:
    """Constant-velocity blob; the base case for convergence studies."""
    p0 = np.asarray(p0, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)

    def trajectory(t):
        t = np.asarray(t, dtype=np.float64)
        out = _const_blob_fields(t, theta, q, lam)
        out["p"] = p0 + np.outer(t, v)
        out["v"] = np.broadcast_to(v, (t.shape[0], 2)).copy()
        return out

    return Scenario(blobs=[Blob(trajectory, rate, polarity)],
                    duration=duration, sensor=sensor, seed=seed,
                    background_rate=background_rate)


def spinning_scenario(radius=300.0, center=(640.0, 360.0), rev_start=0.053,
                      rev_end=6.01, blob_lambda=(6.0, 6.0), rate=50_000.0,
                      duration=90.0, background_rate=0.0, sensor=(1280, 720),
                      seed=0) -> Scenario:
    """Blob on a circle with a linearly ramping revolution rate.

    Optical flow magnitude at time t is 2*pi*rev(t)*radius, so the peak is
    2*pi*rev_end*radius (about 11.3 km/s in pixels at the defaults).
    """
    center = np.asarray(center, dtype=np.float64)
    ramp = (rev_end - rev_start) / duration

    def phase(t):
        return 2.0 * np.pi * (rev_start * t + 0.5 * ramp * t * t)

    def rev(t):
        return rev_start + ramp * t

    def trajectory(t):
        t = np.asarray(t, dtype=np.float64)
        ph = phase(t)
        phdot = 2.0 * np.pi * rev(t)
        out = _const_blob_fields(t, 0.0, 0.0, blob_lambda)
        out["p"] = center + radius * np.column_stack([np.cos(ph), np.sin(ph)])
        out["v"] = radius * phdot[:, None] * np.column_stack([-np.sin(ph), np.cos(ph)])
        return out

    sc = Scenario(blobs=[Blob(trajectory, rate, "flicker")], duration=duration,
                  sensor=sensor, seed=seed, background_rate=background_rate)
    sc.extras["peak_flow"] = 2.0 * np.pi * rev_end * radius
    sc.extras["flow_at"] = lambda t: 2.0 * np.pi * rev(np.asarray(t)) * radius
    return sc


def shake_scenario(flow_amplitude=1000.0, shake_hz=6.0, blob_start=(840.0, 460.0),
                   blob_lambda=(8.0, 8.0), rate=30_000.0, duration=5.0,
                   focal=1000.0, sensor=(1280, 720), background_rate=0.0,
                   seed=0) -> Scenario:
    """World-fixed blob seen by a camera rotating back and forth.

    The camera angular velocity is a two-axis sinusoid at shake_hz whose
    amplitude produces roughly +-flow_amplitude pixels/s at the principal
    point. The blob's image trajectory is the integral of the induced flow
    field, computed here on a fine fixed-step grid and interpolated; the
    same grid supplies the velocity truth.
    """
    intr = CameraIntrinsics(f=focal,
                            principal_point=np.array([sensor[0] / 2.0,
                                                      sensor[1] / 2.0]))
    amp = flow_amplitude / focal   # rad/s

    def omega_fn(t):
        t = np.asarray(t, dtype=np.float64)
        w = 2.0 * np.pi * shake_hz
        return np.column_stack([amp * np.sin(w * t),
                                amp * np.cos(w * t),
                                np.zeros(t.shape)])

    def flow(p, t):
        om = omega_fn(np.atleast_1d(t))[0]
        px, py = p - intr.principal_point
        f = intr.f
        return np.array([
            om[0] * px * py / f - om[1] * (f + px * px / f) + om[2] * py,
            om[0] * (f + py * py / f) - om[1] * px * py / f - om[2] * px,
        ])

    # integrate the image trajectory with classical RK4 on a fixed grid
    h = 1e-4
    steps = int(round(duration / h))
    grid_t = np.linspace(0.0, duration, steps + 1)
    grid_p = np.empty((steps + 1, 2))
    grid_p[0] = np.asarray(blob_start, dtype=np.float64)
    for i in range(steps):
        t, p = grid_t[i], grid_p[i]
        k1 = flow(p, t)
        k2 = flow(p + 0.5 * h * k1, t + 0.5 * h)
        k3 = flow(p + 0.5 * h * k2, t + 0.5 * h)
        k4 = flow(p + h * k3, t + h)
        grid_p[i + 1] = p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    grid_v = np.empty_like(grid_p)
    om_grid = omega_fn(grid_t)
    pbx = grid_p[:, 0] - intr.principal_point[0]
    pby = grid_p[:, 1] - intr.principal_point[1]
    f = intr.f
    grid_v[:, 0] = (om_grid[:, 0] * pbx * pby / f
                    - om_grid[:, 1] * (f + pbx * pbx / f) + om_grid[:, 2] * pby)
    grid_v[:, 1] = (om_grid[:, 0] * (f + pby * pby / f)
                    - om_grid[:, 1] * pbx * pby / f - om_grid[:, 2] * pbx)

    def trajectory(t):
        t = np.asarray(t, dtype=np.float64)
        out = _const_blob_fields(t, 0.0, 0.0, blob_lambda)
        out["p"] = np.column_stack([np.interp(t, grid_t, grid_p[:, 0]),
                                    np.interp(t, grid_t, grid_p[:, 1])])
        out["v"] = np.column_stack([np.interp(t, grid_t, grid_v[:, 0]),
                                    np.interp(t, grid_t, grid_v[:, 1])])
        return out

    sc = Scenario(blobs=[Blob(trajectory, rate, "flicker")], duration=duration,
                  sensor=sensor, seed=seed, background_rate=background_rate,
                  gyro_fn=omega_fn, intrinsics=intr)
    sc.extras["omega_fn"] = omega_fn
    return sc


def taillight_scenario(initial_separation=100.0, growth_rate=0.5,
                       center=(640.0, 360.0), blob_lambda=(6.0, 6.0),
                       rate_per_light=50_000.0, duration=2.0,
                       sensor=(1280, 720), background_rate=0.0, seed=0) -> Scenario:
    """Two flickering blobs whose separation grows exponentially.

    s(t) = s0 * exp(k t) gives a constant true inverse time-to-contact of
    exactly k, the cleanest possible oracle for the TTC pipeline.
    """
    center = np.asarray(center, dtype=np.float64)
    s0, k = float(initial_separation), float(growth_rate)

    def make_traj(sign):
        def trajectory(t):
            t = np.asarray(t, dtype=np.float64)
            s = s0 * np.exp(k * t)
            out = _const_blob_fields(t, 0.0, 0.0, blob_lambda)
            out["p"] = center + np.column_stack([sign * 0.5 * s, np.zeros(t.shape)])
            out["v"] = np.column_stack([sign * 0.5 * k * s, np.zeros(t.shape)])
            return out
        return trajectory

    sc = Scenario(blobs=[Blob(make_traj(-1.0), rate_per_light, "flicker"),
                         Blob(make_traj(+1.0), rate_per_light, "flicker")],
                  duration=duration, sensor=sensor, seed=seed,
                  background_rate=background_rate)
    sc.extras["inv_tau_true"] = k
    sc.extras["separation"] = lambda t: s0 * np.exp(k * np.asarray(t))
    return sc


def approach_scenario(target_diameter_m=0.3, focal_px=1000.0, range_start_m=17.0,
                      range_end_m=8.0, center=(640.0, 360.0), aspect=0.8,
                      rate=30_000.0, duration=5.0, sensor=(1280, 720),
                      background_rate=0.0, seed=0) -> Scenario:
    """Static blob whose size grows as the (known-diameter) target closes in.

    Range shrinks linearly from range_start_m to range_end_m; the major
    axis is diameter * focal / range at every instant, so the range can be
    recovered from the tracked shape alone.
    """
    center = np.asarray(center, dtype=np.float64)
    a, f = float(target_diameter_m), float(focal_px)

    def range_at(t):
        t = np.asarray(t, dtype=np.float64)
        return range_start_m + (range_end_m - range_start_m) * t / duration

    def trajectory(t):
        t = np.asarray(t, dtype=np.float64)
        lam_max = a * f / range_at(t)
        out = {
            "p": np.broadcast_to(center, (t.shape[0], 2)).copy(),
            "v": np.zeros((t.shape[0], 2)),
            "theta": np.zeros(t.shape),
            "q": np.zeros(t.shape),
            "lam": np.column_stack([lam_max, aspect * lam_max]),
        }
        return out

    intr = CameraIntrinsics(f=f, principal_point=np.zeros(2))
    sc = Scenario(blobs=[Blob(trajectory, rate, "flicker")], duration=duration,
                  sensor=sensor, seed=seed, background_rate=background_rate,
                  intrinsics=intr)
    sc.extras["range_at"] = range_at
    sc.extras["diameter_m"] = a
    return sc
