"""Asynchronous event-blob tracking.

Consumes event-camera streams one event at a time, maintains per-target
extended Kalman filters over position, velocity, orientation, angular rate,
and elliptical shape, and derives time-to-contact and range. A synthetic
generator draws streams from the same blob model, so everything here is
testable without hardware.
"""

from .analytics import inverse_ttc, range_estimate, ttc_series
from .config import RunConfig
from .engine import StreamEngine
from .ekf import (GyroHold, PredictedState, ProcessNoise, assemble_A,
                  ego_motion_flow, ego_motion_jacobian, predict, update)
from .model import (CameraIntrinsics, Event, GyroSample, TrackState,
                    blob_likelihood, make_shape_matrix, shape_inverse)
from .pseudo_meas import (ChiBuffer, g_statistic, h_residual, jacobian_G,
                          jacobian_H, stack_measurement)
from .synth import (EventStream, GyroStream, Scenario, approach_scenario,
                    generate, linear_scenario, shake_scenario,
                    spinning_scenario, taillight_scenario)

__version__ = "0.1.0"

__all__ = [
    "CameraIntrinsics", "ChiBuffer", "Event", "EventStream", "GyroHold",
    "GyroSample", "GyroStream", "PredictedState", "ProcessNoise", "RunConfig",
    "Scenario", "StreamEngine", "TrackState", "approach_scenario",
    "assemble_A", "blob_likelihood", "ego_motion_flow", "ego_motion_jacobian",
    "g_statistic", "generate", "h_residual", "inverse_ttc", "jacobian_G",
    "jacobian_H", "linear_scenario", "make_shape_matrix", "predict",
    "range_estimate", "shake_scenario", "shape_inverse", "spinning_scenario",
    "stack_measurement", "taillight_scenario", "ttc_series", "update",
]
