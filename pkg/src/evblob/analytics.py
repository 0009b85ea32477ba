"""Quantities derived from track outputs: time-to-contact and range.

Inverse time-to-contact between two tracked blobs is the relative rate of
change of their pixel separation,

    1/tau = (v_l - v_r) . (p_l - p_r) / |p_l - p_r|^2

positive while the separation grows (an approaching target spreads on the
image plane). Range to a target of known physical diameter follows from
the tracked blob size: range = diameter * focal / max(lam).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import CameraIntrinsics, TrackState

DEFAULT_TTC_THRESHOLD = 0.3   # 1/s
_MIN_SEPARATION = 1e-6        # px, below this the quotient is meaningless

FLAG_NONE = "none"
FLAG_APPROACHING = "approaching"
FLAG_ABOVE_THRESHOLD = "above_threshold"
FLAG_DIVERGING = "diverging"

# numeric codes used in vectorized series and CSV output
FLAG_CODES = {FLAG_NONE: 0, FLAG_APPROACHING: 1, FLAG_ABOVE_THRESHOLD: 2,
              FLAG_DIVERGING: 3}
FLAG_NAMES = {v: k for k, v in FLAG_CODES.items()}


@dataclass
class TtcSample:
    t: float            # seconds; nan when not tied to a stream time
    s: float            # separation, pixels
    v_rel: float        # separation rate, pixels/s
    inv_tau: float      # 1/s
    flag: str


def _pv(obj):
    """Accept a TrackState, a (p, v) pair, or a dict with p and v."""
    if isinstance(obj, TrackState):
        return obj.p, obj.v
    if isinstance(obj, dict):
        return np.asarray(obj["p"], float), np.asarray(obj["v"], float)
    p, v = obj
    return np.asarray(p, dtype=np.float64), np.asarray(v, dtype=np.float64)


def classify(inv_tau: float, threshold: float) -> str:
    if inv_tau > threshold:
        return FLAG_ABOVE_THRESHOLD
    if inv_tau > 0:
        return FLAG_APPROACHING
    if inv_tau < 0:
        return FLAG_DIVERGING
    return FLAG_NONE


def inverse_ttc(left, right, threshold: float = DEFAULT_TTC_THRESHOLD,
                t: float = float("nan")):
    """One TTC sample from two blob states, or None when they coincide."""
    p_l, v_l = _pv(left)
    p_r, v_r = _pv(right)
    dp = p_l - p_r
    s2 = float(dp @ dp)
    if s2 <= _MIN_SEPARATION**2:
        return None
    s = np.sqrt(s2)
    inv_tau = float((v_l - v_r) @ dp) / s2
    return TtcSample(t=t, s=float(s), v_rel=inv_tau * float(s),
                     inv_tau=inv_tau, flag=classify(inv_tau, threshold))


def ttc_series(t_l, p_l, v_l, t_r, p_r, v_r,
               threshold: float = DEFAULT_TTC_THRESHOLD):
    """Vectorized TTC over two asynchronous track histories.

    Samples are emitted at the union of the two update clocks; the other
    track contributes its latest state (zero-order hold). Times before both
    tracks have reported are skipped, as are coincident-center samples.

    Returns a dict of arrays: t, s, v_rel, inv_tau, flag (int codes per
    FLAG_CODES), skipped (count of degenerate samples).
    """
    t_l = np.asarray(t_l, dtype=np.float64)
    t_r = np.asarray(t_r, dtype=np.float64)
    t_all = np.concatenate([t_l, t_r])
    order = np.argsort(t_all, kind="stable")
    t_all = t_all[order]

    il = np.searchsorted(t_l, t_all, side="right") - 1
    ir = np.searchsorted(t_r, t_all, side="right") - 1
    ok = (il >= 0) & (ir >= 0)
    t_all, il, ir = t_all[ok], il[ok], ir[ok]

    dp = np.asarray(p_l)[il] - np.asarray(p_r)[ir]
    dv = np.asarray(v_l)[il] - np.asarray(v_r)[ir]
    s2 = np.einsum("ij,ij->i", dp, dp)
    good = s2 > _MIN_SEPARATION**2
    skipped = int((~good).sum())
    t_all, dp, dv, s2 = t_all[good], dp[good], dv[good], s2[good]

    inv_tau = np.einsum("ij,ij->i", dv, dp) / s2
    s = np.sqrt(s2)
    flag = np.zeros(inv_tau.shape, dtype=np.int8)
    flag[inv_tau > 0] = FLAG_CODES[FLAG_APPROACHING]
    flag[inv_tau > threshold] = FLAG_CODES[FLAG_ABOVE_THRESHOLD]
    flag[inv_tau < 0] = FLAG_CODES[FLAG_DIVERGING]
    return {"t": t_all, "s": s, "v_rel": inv_tau * s, "inv_tau": inv_tau,
            "flag": flag, "skipped": skipped}


def range_estimate(state, diameter_m: float, intrinsics: CameraIntrinsics) -> float:
    """Range in meters from the tracked blob size and known target size."""
    lam = state.lam if isinstance(state, TrackState) else np.asarray(state, float)
    lam_max = float(np.max(lam))
    if lam_max <= 0:
        raise ValueError("blob size must be positive")
    return diameter_m * intrinsics.f / lam_max


def range_series(t, lam, diameter_m: float, intrinsics: CameraIntrinsics):
    """Vectorized range over a track history; lam is (N, 2)."""
    lam_max = np.max(np.asarray(lam, dtype=np.float64), axis=1)
    return {"t": np.asarray(t, dtype=np.float64),
            "range_m": diameter_m * intrinsics.f / lam_max}
