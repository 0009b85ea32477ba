"""CSV formats and streaming readers/writers.

All files are plain CSV with a one-line column header, preceded by
'# key=value' metadata lines recording the effective configuration, so any
output can be rerun exactly from its own header. Timestamps are integer
microseconds on disk.

Formats:
    events.csv   t_us,x,y,p
    gyro.csv     t_us,wx,wy,wz
    truth.csv    t_us,px,py,vx,vy,theta,q,l1,l2
    tracks.csv   t_us,track_id,px,py,vx,vy,theta,q,l1,l2[,dx,dy],var_*
    ttc.csv      t_us,s_px,v_rel,inv_tau,flag
    range.csv    t_us,track_id,range_m
"""

from __future__ import annotations

import numpy as np
import pandas as pd

from .synth import EventStream, GyroStream, TruthTrace

EVENT_COLUMNS = ["t_us", "x", "y", "p"]
GYRO_COLUMNS = ["t_us", "wx", "wy", "wz"]
TRUTH_COLUMNS = ["t_us", "px", "py", "vx", "vy", "theta", "q", "l1", "l2"]

STATE_NAMES_8 = ["px", "py", "vx", "vy", "theta", "q", "l1", "l2"]
STATE_NAMES_10 = STATE_NAMES_8 + ["dx", "dy"]

DEFAULT_CHUNK_ROWS = 1_000_000


def track_columns(mode: str):
    names = STATE_NAMES_10 if mode == "non_flicker" else STATE_NAMES_8
    return ["t_us", "track_id"] + names + ["var_" + n for n in names]


def _write_header(fh, columns, metadata):
    if metadata:
        for key, value in metadata.items():
            fh.write(f"# {key}={value}\n")
    fh.write(",".join(columns) + "\n")


def read_metadata(path) -> dict:
    """Leading '# key=value' lines of any of our CSV files."""
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if "=" in body:
                key, value = body.split("=", 1)
                meta[key.strip()] = value.strip()
    return meta


def _locate_bad_line(path, columns):
    """Best-effort scan for the first row that does not parse."""
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#") or line == ",".join(columns):
                continue
            parts = line.split(",")
            if len(parts) != len(columns):
                return lineno, line
            try:
                [float(p) for p in parts]
            except ValueError:
                return lineno, line
    return None, None


def _read_csv_chunks(path, columns, chunk_rows):
    try:
        reader = pd.read_csv(path, comment="#", chunksize=chunk_rows,
                             dtype=np.float64)
        for frame in reader:
            if list(frame.columns) != columns:
                raise ValueError(
                    f"{path}: expected columns {columns}, got {list(frame.columns)}")
            # pandas pads short rows with NaN instead of failing
            if frame.isna().to_numpy().any():
                raise ValueError(f"{path}: non-numeric or short row")
            yield frame
    except (ValueError, pd.errors.ParserError) as exc:
        lineno, line = _locate_bad_line(path, columns)
        if lineno is not None:
            raise ValueError(f"{path}:{lineno}: malformed row {line!r}") from exc
        raise


def read_events(path, chunk_rows: int = DEFAULT_CHUNK_ROWS):
    """Stream an event CSV as EventStream chunks with bounded memory."""
    for frame in _read_csv_chunks(path, EVENT_COLUMNS, chunk_rows):
        yield EventStream(
            t_us=frame["t_us"].to_numpy(np.int64),
            xy=np.column_stack([frame["x"].to_numpy(np.float64),
                                frame["y"].to_numpy(np.float64)]),
            rho=frame["p"].to_numpy(np.int8))


def read_events_all(path) -> EventStream:
    return EventStream.concat(list(read_events(path)))


def read_gyro(path) -> GyroStream:
    """Load a gyro CSV whole; an empty file disables ego-motion terms."""
    frames = list(_read_csv_chunks(path, GYRO_COLUMNS, DEFAULT_CHUNK_ROWS))
    if not frames:
        return GyroStream(t_us=np.empty(0, dtype=np.int64),
                          omega=np.empty((0, 3)))
    frame = pd.concat(frames, ignore_index=True)
    return GyroStream(
        t_us=frame["t_us"].to_numpy(np.int64),
        omega=frame[["wx", "wy", "wz"]].to_numpy(np.float64))


def write_events_body(fh, events: EventStream) -> None:
    """Append event rows to an already-opened CSV (header written elsewhere)."""
    frame = pd.DataFrame({
        "t_us": events.t_us,
        "x": events.xy[:, 0],
        "y": events.xy[:, 1],
        "p": events.rho.astype(np.int64),
    })
    frame.to_csv(fh, header=False, index=False)


def write_events(path, events: EventStream, metadata: dict | None = None) -> None:
    with open(path, "w") as fh:
        _write_header(fh, EVENT_COLUMNS, metadata)
        write_events_body(fh, events)


def write_gyro(path, gyro: GyroStream, metadata: dict | None = None) -> None:
    with open(path, "w") as fh:
        _write_header(fh, GYRO_COLUMNS, metadata)
        frame = pd.DataFrame({
            "t_us": gyro.t_us,
            "wx": gyro.omega[:, 0],
            "wy": gyro.omega[:, 1],
            "wz": gyro.omega[:, 2],
        })
        frame.to_csv(fh, header=False, index=False)


def write_truth(path, truth: TruthTrace, metadata: dict | None = None) -> None:
    with open(path, "w") as fh:
        _write_header(fh, TRUTH_COLUMNS, metadata)
        frame = pd.DataFrame({
            "t_us": truth.t_us,
            "px": truth.p[:, 0], "py": truth.p[:, 1],
            "vx": truth.v[:, 0], "vy": truth.v[:, 1],
            "theta": truth.theta, "q": truth.q,
            "l1": truth.lam[:, 0], "l2": truth.lam[:, 1],
        })
        frame.to_csv(fh, header=False, index=False)


class TrackWriter:
    """Appends engine output rows to a track CSV, chunk by chunk."""

    def __init__(self, path, mode: str, metadata: dict | None = None):
        self.columns = track_columns(mode)
        self._fh = open(path, "w")
        _write_header(self._fh, self.columns, metadata)
        self.rows_written = 0

    def write(self, rows: np.ndarray) -> None:
        if rows.shape[0] == 0:
            return
        if rows.shape[1] != len(self.columns):
            raise ValueError(
                f"row width {rows.shape[1]} does not match {len(self.columns)} columns")
        frame = pd.DataFrame(rows, columns=self.columns)
        frame["t_us"] = frame["t_us"].astype(np.int64)
        frame["track_id"] = frame["track_id"].astype(np.int64)
        frame.to_csv(self._fh, header=False, index=False)
        self.rows_written += rows.shape[0]

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_tracks(path):
    """Load a track CSV back into a plain rows array plus its columns."""
    meta = read_metadata(path)
    mode = meta.get("mode", "flicker")
    columns = track_columns(mode)
    frames = list(_read_csv_chunks(path, columns, DEFAULT_CHUNK_ROWS))
    if not frames:
        rows = np.empty((0, len(columns)))
    else:
        rows = pd.concat(frames, ignore_index=True).to_numpy(np.float64)
    return rows, columns, meta


def write_ttc(path, series: dict, metadata: dict | None = None) -> None:
    columns = ["t_us", "s_px", "v_rel", "inv_tau", "flag"]
    with open(path, "w") as fh:
        _write_header(fh, columns, metadata)
        frame = pd.DataFrame({
            "t_us": np.rint(series["t"] * 1e6).astype(np.int64),
            "s_px": series["s"],
            "v_rel": series["v_rel"],
            "inv_tau": series["inv_tau"],
            "flag": series["flag"].astype(np.int64),
        })
        frame.to_csv(fh, header=False, index=False)


def write_range(path, series: dict, track_id: int,
                metadata: dict | None = None) -> None:
    columns = ["t_us", "track_id", "range_m"]
    with open(path, "w") as fh:
        _write_header(fh, columns, metadata)
        frame = pd.DataFrame({
            "t_us": np.rint(series["t"] * 1e6).astype(np.int64),
            "track_id": np.full(series["t"].shape, track_id, dtype=np.int64),
            "range_m": series["range_m"],
        })
        frame.to_csv(fh, header=False, index=False)


def write_summary(path, summary: dict, metadata: dict | None = None) -> None:
    """Flat key=value run summary (counters, per-track lifetimes)."""
    with open(path, "w") as fh:
        if metadata:
            for key, value in metadata.items():
                fh.write(f"# {key}={value}\n")
        for key, value in summary.items():
            if key == "tracks":
                for tid, st in value.items():
                    for name, v in st.items():
                        fh.write(f"track{tid}.{name}={v}\n")
            else:
                fh.write(f"{key}={value}\n")
