"""End-to-end pipeline drivers: synth, track, ttc, range, bench.

These are what the command-line front end calls; they are equally usable
from scripts and tests. Each writes CSVs whose headers carry the effective
configuration.
"""

from __future__ import annotations

import time
from pathlib import Path

import numpy as np

from . import analytics, io, synth
from .config import RunConfig
from .engine import StreamEngine
from .model import CameraIntrinsics

SCENARIOS = {
    "linear": synth.linear_scenario,
    "spinning": synth.spinning_scenario,
    "shake": synth.shake_scenario,
    "taillight": synth.taillight_scenario,
    "approach": synth.approach_scenario,
}


def build_scenario(name: str, seed: int = 0, params: dict | None = None):
    if name not in SCENARIOS:
        raise ValueError(f"unknown scenario {name!r}; pick one of {sorted(SCENARIOS)}")
    params = dict(params or {})
    if name == "linear" and "p0" not in params:
        params["p0"] = (640.0, 360.0)
        params.setdefault("v", (120.0, -40.0))
    return SCENARIOS[name](seed=seed, **params)


def run_synth(name: str, out_dir, seed: int = 0, params: dict | None = None,
              chunk_seconds: float = synth.CHUNK_SECONDS) -> dict:
    """Generate a scenario and write events/gyro/truth CSVs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sc = build_scenario(name, seed=seed, params=params)
    meta = {"scenario": name, "seed": str(seed), "duration": f"{sc.duration:g}",
            "background_rate": f"{sc.background_rate:g}",
            "sensor": f"{sc.sensor[0]}x{sc.sensor[1]}"}
    for key, value in (params or {}).items():
        meta[f"param_{key}"] = f"{value}"

    events_path = out / "events.csv"
    n_events = 0
    with open(events_path, "w") as fh:
        io._write_header(fh, io.EVENT_COLUMNS, meta)
        for chunk in synth.iter_chunks(sc, chunk_seconds):
            if len(chunk) == 0:
                continue
            io.write_events_body(fh, chunk)
            n_events += len(chunk)

    gyro = synth.sample_gyro(sc)
    if gyro is not None:
        io.write_gyro(out / "gyro.csv", gyro, meta)
    for bi, trace in enumerate(synth.sample_truth(sc)):
        name_i = "truth.csv" if bi == 0 else f"truth_{bi}.csv"
        io.write_truth(out / name_i, trace, meta)
    return {"events": n_events, "events_path": str(events_path),
            "gyro": gyro is not None, "blobs": len(sc.blobs)}


def run_track(config: RunConfig, events_path, gyro_path=None, out_dir=".") -> dict:
    """Track an event file and write tracks.csv plus a run summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    engine = StreamEngine(config)
    if gyro_path is not None:
        engine.set_gyro(io.read_gyro(gyro_path))
    meta = config.as_metadata()

    all_rows = []
    with io.TrackWriter(out / "tracks.csv", config.mode, meta) as writer:
        for chunk in io.read_events(events_path):
            rows = engine.feed(chunk)
            writer.write(rows)
            if config.ttc_pairs or config.range_targets:
                all_rows.append(rows)

    summary = engine.summary()
    io.write_summary(out / "summary.txt", summary, meta)

    if all_rows:
        rows = np.concatenate([r for r in all_rows if r.shape[0]], axis=0) \
            if any(r.shape[0] for r in all_rows) else np.empty((0, engine.ncols))
        intr = CameraIntrinsics(f=config.focal,
                                principal_point=np.array([config.cx, config.cy]))
        for a, b in config.ttc_pairs:
            series = ttc_from_rows(rows, a, b, config.ttc_threshold)
            io.write_ttc(out / f"ttc_{a}_{b}.csv", series, meta)
        for tid, diameter in config.range_targets:
            series = range_from_rows(rows, tid, diameter, intr)
            io.write_range(out / f"range_{tid}.csv", series, tid, meta)
    return summary


def split_track_rows(rows: np.ndarray, track_id: int):
    """Select one track's rows and unpack t (s), p, v, lam columns."""
    sel = rows[rows[:, 1] == track_id]
    return {
        "t": sel[:, 0] * 1e-6,
        "p": sel[:, 2:4],
        "v": sel[:, 4:6],
        "theta": sel[:, 6],
        "q": sel[:, 7],
        "lam": sel[:, 8:10],
        "rows": sel,
    }


def ttc_from_rows(rows: np.ndarray, id_a: int, id_b: int,
                  threshold: float) -> dict:
    a = split_track_rows(rows, id_a)
    b = split_track_rows(rows, id_b)
    return analytics.ttc_series(a["t"], a["p"], a["v"],
                                b["t"], b["p"], b["v"], threshold)


def range_from_rows(rows: np.ndarray, track_id: int, diameter_m: float,
                    intrinsics: CameraIntrinsics) -> dict:
    tr = split_track_rows(rows, track_id)
    return analytics.range_series(tr["t"], tr["lam"], diameter_m, intrinsics)


def run_bench(sizes=(100_000, 1_000_000, 10_000_000), seed: int = 0,
              out_dir=None, rate_duration: float = 10.0) -> dict:
    """Time the engine on synthetic streams and fit the scaling exponent.

    A near-1 exponent of wall time versus event count is the linearity
    check; per-size throughput is reported alongside.
    """
    results = []
    for n_target in sizes:
        rate = n_target / rate_duration
        sc = synth.linear_scenario(p0=(640.0, 360.0), v=(30.0, 10.0),
                                   lam=(6.0, 6.0), rate=rate,
                                   duration=rate_duration, seed=seed)
        cfg = RunConfig(seeds=[(0.0, 640.0, 360.0)])
        engine = StreamEngine(cfg, collect=False)
        chunks = list(synth.iter_chunks(sc))
        # one tiny warm call so JIT compilation stays out of the timing
        engine_warm = StreamEngine(cfg, collect=False)
        engine_warm.feed((chunks[0].t_us[:10], chunks[0].xy[:10],
                          chunks[0].rho[:10]))
        start = time.perf_counter()
        for chunk in chunks:
            engine.feed(chunk)
        elapsed = time.perf_counter() - start
        results.append({"n_events": engine.events_seen,
                        "seconds": elapsed,
                        "events_per_s": engine.events_seen / elapsed,
                        "matched": engine.events_matched})

    logn = np.log([r["n_events"] for r in results])
    logt = np.log([r["seconds"] for r in results])
    exponent = float(np.polyfit(logn, logt, 1)[0])
    report = {"sizes": results, "scaling_exponent": exponent}

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "bench.csv", "w") as fh:
            fh.write(f"# scaling_exponent={exponent}\n")
            fh.write("n_events,seconds,events_per_s,matched\n")
            for r in results:
                fh.write(f"{r['n_events']},{r['seconds']},"
                         f"{r['events_per_s']},{r['matched']}\n")
    return report
