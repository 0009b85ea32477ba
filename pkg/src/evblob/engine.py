"""Streaming tracking engine over the compiled kernels.

Feed events in time-ordered chunks; matched events come back as plain
float64 rows

    [t_us, track_id, state(0:d), var_diag(0:d)]

so a 90-second, multi-million-event run needs only one chunk of memory at a
time. The engine is single-threaded and strictly sequential, which is what
makes two runs over the same input byte-identical.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .config import RunConfig
from .ekf import ProcessNoise
from .model import LAMBDA_FLOOR
from .synth import EventStream, GyroStream


class StreamEngine:
    """One tracking run: tracks are spawned from config.seeds as the stream
    reaches their start times, then consume every event that falls inside
    their association gate."""

    def __init__(self, config: RunConfig, collect: bool = True):
        self.config = config
        self.collect = collect
        self.d = config.dim
        self.ncols = 2 + 2 * self.d

        seeds = np.asarray([[t, sx, sy] for t, sx, sy in config.seeds],
                           dtype=np.float64).reshape(-1, 3)
        n = seeds.shape[0]
        self._seeds = seeds
        self._x = np.zeros((n, 10))
        self._cov = np.zeros((n, 10, 10))
        self._buf = np.zeros((n, config.n_buffer, 6))
        self._buf_count = np.zeros(n, dtype=np.int64)
        self._buf_head = np.zeros(n, dtype=np.int64)
        self._sigma = np.zeros(n)
        self._last_t = np.zeros(n)
        self._alive = np.zeros(n, dtype=np.uint8)
        self._spawned = np.zeros(n, dtype=np.uint8)
        self._track_matched = np.zeros(n, dtype=np.int64)
        self._prior_diag = np.zeros(10)
        self._prior_diag[:self.d] = config.prior_diag()
        self._init_lam = float(config.init_lambda_vec()[0])

        self._Q = ProcessNoise(qp=config.qp, qv=config.qv, qtheta=config.qtheta,
                               qq=config.qq, qlambda=config.qlambda,
                               qdelta=config.qdelta).as_matrix(self.d)
        self._counters = np.zeros(4, dtype=np.int64)
        self._stream_state = np.array([-np.inf])
        self._gyro_t = np.empty(0)
        self._gyro_om = np.empty((0, 3))
        self._gyro_cursor = np.array([-1], dtype=np.int64)

        # scratch reused across feeds
        self._xs = np.zeros(10)
        self._covs = np.zeros((10, 10))
        self._F = np.zeros((10, 10))
        self._T1 = np.zeros((3, 10))
        self._T2 = np.zeros((10, 10))
        self._C = np.zeros((3, 10))
        self._K = np.zeros((10, 3))
        self._B = np.zeros((10, 10))
        self._S3 = np.zeros((3, 3))
        self._SI = np.zeros((3, 3))

    def set_gyro(self, gyro) -> None:
        """Attach a gyro stream (GyroStream or (t_us, omega) arrays)."""
        if gyro is None:
            self._gyro_t = np.empty(0)
            self._gyro_om = np.empty((0, 3))
        else:
            if isinstance(gyro, GyroStream):
                t_us, omega = gyro.t_us, gyro.omega
            else:
                t_us, omega = gyro
            self._gyro_t = np.asarray(t_us, dtype=np.float64) * 1e-6
            self._gyro_om = np.ascontiguousarray(omega, dtype=np.float64)
        self._gyro_cursor[0] = -1

    def feed(self, events) -> np.ndarray:
        """Process one chunk; returns the matched-event rows (possibly empty)."""
        if isinstance(events, EventStream):
            t_us, xy, rho = events.t_us, events.xy, events.rho
        else:
            t_us, xy, rho = events
        t_us = np.ascontiguousarray(t_us, dtype=np.int64)
        t_s = t_us.astype(np.float64) * 1e-6
        xy = np.asarray(xy, dtype=np.float64)
        ex = np.ascontiguousarray(xy[:, 0])
        ey = np.ascontiguousarray(xy[:, 1])
        erho = np.ascontiguousarray(rho, dtype=np.float64)

        cfg = self.config
        out = (np.empty((t_us.shape[0], self.ncols))
               if self.collect else np.empty((0, self.ncols)))
        rc, nrec = _kernels.process_chunk(
            t_s, t_us.astype(np.float64), ex, ey, erho,
            self.d, self._x, self._cov, self._buf, self._buf_count,
            self._buf_head, self._sigma, self._last_t, self._alive,
            self._spawned, self._seeds, self._prior_diag, self._init_lam,
            self._track_matched,
            self._gyro_t, self._gyro_om, self._gyro_cursor,
            self._Q, cfg.n_buffer, cfg.beta_bound, cfg.alpha, cfg.b,
            LAMBDA_FLOOR, cfg.lost_timeout,
            cfg.mode == "non_flicker", cfg.out_of_order == "abort",
            cfg.focal, cfg.cx, cfg.cy,
            self._counters, self._stream_state,
            out, self.collect,
            self._xs, self._covs, self._F, self._T1, self._T2,
            self._C, self._K, self._B, self._S3, self._SI)
        if rc < 0:
            raise ValueError("out-of-order event under abort policy")
        return out[:nrec]

    def run(self, chunks) -> np.ndarray:
        """Feed an iterable of chunks and stack all matched rows."""
        rows = [self.feed(c) for c in chunks]
        rows = [r for r in rows if r.shape[0]]
        if not rows:
            return np.empty((0, self.ncols))
        return np.concatenate(rows, axis=0)

    @property
    def events_seen(self) -> int:
        return int(self._counters[0])

    @property
    def events_matched(self) -> int:
        return int(self._counters[1])

    @property
    def events_rejected(self) -> int:
        return int(self._counters[2])

    @property
    def events_out_of_order(self) -> int:
        return int(self._counters[3])

    def track_alive(self, track_id: int) -> bool:
        return bool(self._alive[track_id])

    def track_state(self, track_id: int) -> np.ndarray:
        return self._x[track_id, :self.d].copy()

    def summary(self) -> dict:
        per_track = {int(i): {"matched": int(self._track_matched[i]),
                              "alive": bool(self._alive[i]),
                              "spawned": bool(self._spawned[i]),
                              "last_t": float(self._last_t[i])}
                     for i in range(self._seeds.shape[0])}
        return {
            "events_seen": self.events_seen,
            "events_matched": self.events_matched,
            "events_rejected": self.events_rejected,
            "events_out_of_order": self.events_out_of_order,
            "tracks": per_track,
        }
