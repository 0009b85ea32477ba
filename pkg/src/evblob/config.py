"""Run configuration: documented defaults, key=value files, CLI overrides.

Precedence is CLI overrides > config file > defaults. Every effective value
is written into output CSV metadata headers so a run can be reproduced
exactly from its own output.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np


def _parse_seeds(text: str):
    """Parse "t:x:y; t:x:y; ..." into a list of (t_s, x, y) tuples."""
    out = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        t, x, y = (float(v) for v in part.split(":"))
        out.append((t, x, y))
    return out


def _parse_pairs(text: str):
    """Parse "a:b; c:d" into a list of (int, int) tuples."""
    out = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        a, b = part.split(":")
        out.append((int(a), int(b)))
    return out


def _parse_targets(text: str):
    """Parse "id:diameter_m; ..." into a list of (int, float) tuples."""
    out = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        i, d = part.split(":")
        out.append((int(i), float(d)))
    return out


@dataclass
class RunConfig:
    """All tracker knobs with their documented defaults.

    Noise intensities are continuous-time (per second). Priors are variances
    on the initial state; the velocity prior defaults to an order of
    magnitude above the position prior. init_lambda defaults to twice the
    expected blob size on both axes.
    """

    mode: str = "flicker"
    n_buffer: int = 8
    beta_bound: float = 1e-2
    alpha: float = 50.0            # threshold low-pass gain, 1/s
    b: float = 3.0                 # threshold-to-blob-size ratio
    lost_timeout: float = 0.5      # seconds without a matched event
    out_of_order: str = "drop"     # or "abort"

    expected_blob_size: float = 5.0
    init_lambda: float = 0.0       # 0 means "use 2 * expected_blob_size"

    pos_prior: float = 25.0
    vel_prior: float = 250.0
    theta_prior: float = 1.0
    q_prior: float = 100.0
    lambda_prior: float = 25.0
    delta_prior: float = 4.0

    qp: float = 1.0
    qv: float = 1e4
    qtheta: float = 1.0
    qq: float = 100.0
    qlambda: float = 10.0
    qdelta: float = 10.0

    focal: float = 1000.0
    cx: float = 0.0
    cy: float = 0.0
    sensor_width: float = 0.0      # 0 means "no bounds check"
    sensor_height: float = 0.0

    ttc_threshold: float = 0.3     # 1/s
    seeds: list = field(default_factory=list)          # [(t_s, x, y)]
    ttc_pairs: list = field(default_factory=list)      # [(id_a, id_b)]
    range_targets: list = field(default_factory=list)  # [(id, diameter_m)]

    def __post_init__(self):
        if self.mode not in ("flicker", "non_flicker"):
            raise ValueError(f"mode must be flicker or non_flicker, got {self.mode!r}")
        if not 2 <= self.n_buffer <= 64:
            raise ValueError(f"n_buffer must be in [2, 64], got {self.n_buffer}")
        if self.out_of_order not in ("drop", "abort"):
            raise ValueError(f"out_of_order must be drop or abort, got {self.out_of_order!r}")
        if self.beta_bound < 0 or self.alpha <= 0 or self.b < 1:
            raise ValueError("need beta_bound >= 0, alpha > 0, b >= 1")

    @property
    def dim(self) -> int:
        return 10 if self.mode == "non_flicker" else 8

    def init_lambda_vec(self) -> np.ndarray:
        lam0 = self.init_lambda if self.init_lambda > 0 else 2.0 * self.expected_blob_size
        return np.array([lam0, lam0])

    def prior_diag(self) -> np.ndarray:
        d = [self.pos_prior, self.pos_prior, self.vel_prior, self.vel_prior,
             self.theta_prior, self.q_prior, self.lambda_prior, self.lambda_prior]
        if self.mode == "non_flicker":
            d += [self.delta_prior, self.delta_prior]
        return np.array(d)

    @classmethod
    def from_sources(cls, path=None, overrides=None) -> "RunConfig":
        """Build a config from defaults, then a key=value file, then overrides."""
        values = {}
        if path is not None:
            values.update(parse_config_file(path))
        if overrides:
            values.update({k: v for k, v in overrides.items() if v is not None})
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**values)

    def as_metadata(self) -> dict:
        """Every effective value, stringified, for output file headers."""
        meta = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "seeds":
                v = ";".join(f"{t:g}:{x:g}:{y:g}" for t, x, y in v)
            elif f.name == "ttc_pairs":
                v = ";".join(f"{a}:{b}" for a, b in v)
            elif f.name == "range_targets":
                v = ";".join(f"{i}:{d:g}" for i, d in v)
            meta[f.name] = str(v)
        return meta


_CONVERTERS = {
    "mode": str, "out_of_order": str,
    "n_buffer": int,
    "seeds": _parse_seeds, "ttc_pairs": _parse_pairs, "range_targets": _parse_targets,
}


def convert_value(key: str, raw: str):
    conv = _CONVERTERS.get(key, float)
    return conv(raw)


def parse_config_file(path) -> dict:
    """Read a key=value config file; '#' starts a comment, blanks ignored."""
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, raw = (s.strip() for s in line.split("=", 1))
            values[key] = convert_value(key, raw)
    return values
