"""Command-line front end.

Subcommands: synth | track | ttc | range | bench. Configuration precedence
is command line > config file > defaults; scenario parameters go through
repeatable --param key=value flags.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import analytics, io, run
from .config import RunConfig, convert_value
from .model import CameraIntrinsics


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--out-dir", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=["flicker", "non_flicker"])


def _parse_params(pairs):
    params = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise SystemExit(f"--param expects key=value, got {pair!r}")
        key, raw = pair.split("=", 1)
        try:
            params[key] = float(raw)
        except ValueError:
            params[key] = raw
    return params


def _load_config(args, extra_overrides=None) -> RunConfig:
    overrides = dict(extra_overrides or {})
    if getattr(args, "mode", None):
        overrides["mode"] = args.mode
    if getattr(args, "set", None):
        for pair in args.set:
            if "=" not in pair:
                raise SystemExit(f"--set expects key=value, got {pair!r}")
            key, raw = pair.split("=", 1)
            overrides[key] = convert_value(key.strip(), raw.strip())
    return RunConfig.from_sources(getattr(args, "config", None), overrides)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="evblob",
        description="Asynchronous event-blob tracking: synthetic streams, "
                    "per-event EKF tracks, time-to-contact and range outputs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic scenario")
    _add_common(p_synth)
    p_synth.add_argument("--scenario", default="linear",
                         choices=sorted(run.SCENARIOS))
    p_synth.add_argument("--param", action="append", metavar="KEY=VALUE",
                         help="scenario parameter override, repeatable")

    p_track = sub.add_parser("track", help="run the tracker over an event file")
    _add_common(p_track)
    p_track.add_argument("--events", required=True)
    p_track.add_argument("--gyro")
    p_track.add_argument("--set", action="append", metavar="KEY=VALUE",
                         help="config override, repeatable")

    p_ttc = sub.add_parser("ttc", help="time-to-contact from a track CSV")
    _add_common(p_ttc)
    p_ttc.add_argument("--tracks", required=True, help="tracks.csv from `track`")
    p_ttc.add_argument("--pair", required=True, metavar="ID_A:ID_B")
    p_ttc.add_argument("--threshold", type=float,
                       default=analytics.DEFAULT_TTC_THRESHOLD)

    p_range = sub.add_parser("range", help="range from a track CSV")
    _add_common(p_range)
    p_range.add_argument("--tracks", required=True)
    p_range.add_argument("--target", required=True, metavar="ID:DIAMETER_M")

    p_bench = sub.add_parser("bench", help="throughput and scaling benchmark")
    _add_common(p_bench)
    p_bench.add_argument("--sizes", default="100000,1000000,10000000")

    args = parser.parse_args(argv)
    out_dir = Path(args.out_dir)

    if args.command == "synth":
        report = run.run_synth(args.scenario, out_dir, seed=args.seed,
                               params=_parse_params(args.param))
        print(f"wrote {report['events']} events for {report['blobs']} blob(s) "
              f"to {out_dir}")
        return 0

    if args.command == "track":
        try:
            config = _load_config(args)
        except (ValueError, OSError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        summary = run.run_track(config, args.events, args.gyro, out_dir)
        print(f"events seen={summary['events_seen']} "
              f"matched={summary['events_matched']} "
              f"rejected={summary['events_rejected']} "
              f"out_of_order={summary['events_out_of_order']}")
        return 0

    if args.command == "ttc":
        rows, _, meta = io.read_tracks(args.tracks)
        id_a, id_b = (int(v) for v in args.pair.split(":"))
        series = run.ttc_from_rows(rows, id_a, id_b, args.threshold)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / f"ttc_{id_a}_{id_b}.csv"
        io.write_ttc(path, series, meta)
        print(f"wrote {series['t'].shape[0]} TTC samples to {path} "
              f"(skipped {series['skipped']} degenerate)")
        return 0

    if args.command == "range":
        rows, _, meta = io.read_tracks(args.tracks)
        tid_raw, diam_raw = args.target.split(":")
        tid, diameter = int(tid_raw), float(diam_raw)
        focal = float(meta.get("focal", 1000.0))
        pp = np.array([float(meta.get("cx", 0.0)), float(meta.get("cy", 0.0))])
        intr = CameraIntrinsics(f=focal, principal_point=pp)
        series = run.range_from_rows(rows, tid, diameter, intr)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / f"range_{tid}.csv"
        io.write_range(path, series, tid, meta)
        print(f"wrote {series['t'].shape[0]} range samples to {path}")
        return 0

    if args.command == "bench":
        sizes = tuple(int(float(s)) for s in args.sizes.split(","))
        report = run.run_bench(sizes, seed=args.seed, out_dir=out_dir)
        for entry in report["sizes"]:
            print(f"N={entry['n_events']:>10d}  {entry['seconds']:8.3f} s  "
                  f"{entry['events_per_s']/1e6:6.2f} Mev/s")
        print(f"scaling exponent: {report['scaling_exponent']:.3f}")
        return 0

    return 1


if __name__ == "__main__":
    raise SystemExit(main())
