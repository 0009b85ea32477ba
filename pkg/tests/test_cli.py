"""The command-line front end, one subcommand at a time."""

import numpy as np
import pytest

from evblob import io
from evblob.cli import main


def run_synth_linear(tmp_path, extra=()):
    args = ["synth", "--scenario", "linear", "--out-dir", str(tmp_path),
            "--seed", "3", "--param", "duration=0.5", "--param", "rate=2000"]
    args += list(extra)
    assert main(args) == 0


def test_synth_writes_events_and_truth(tmp_path, capsys):
    run_synth_linear(tmp_path)
    assert (tmp_path / "events.csv").exists()
    assert (tmp_path / "truth.csv").exists()
    assert not (tmp_path / "gyro.csv").exists()
    meta = io.read_metadata(tmp_path / "events.csv")
    assert meta["scenario"] == "linear"
    assert meta["seed"] == "3"
    assert meta["param_duration"] == "0.5"
    events = io.read_events_all(tmp_path / "events.csv")
    assert 800 < len(events) < 1200
    assert "wrote" in capsys.readouterr().out


def test_synth_shake_includes_gyro(tmp_path):
    assert main(["synth", "--scenario", "shake", "--out-dir", str(tmp_path),
                 "--param", "duration=0.5", "--param", "rate=2000"]) == 0
    gyro = io.read_gyro(tmp_path / "gyro.csv")
    assert len(gyro) == 501


def test_synth_rejects_unknown_scenario(tmp_path):
    with pytest.raises(SystemExit):
        main(["synth", "--scenario", "warp", "--out-dir", str(tmp_path)])


def test_track_end_to_end(tmp_path, capsys):
    run_synth_linear(tmp_path)
    out = tmp_path / "run"
    assert main(["track", "--events", str(tmp_path / "events.csv"),
                 "--out-dir", str(out), "--set", "seeds=0:640:360"]) == 0
    assert (out / "summary.txt").exists()
    rows, columns, meta = io.read_tracks(out / "tracks.csv")
    assert rows.shape[0] > 500
    assert columns[0] == "t_us"
    assert meta["mode"] == "flicker"
    assert meta["seeds"] == "0:640:360"
    assert "matched=" in capsys.readouterr().out
    # the tracker follows the moving blob: last position ~ (640,360)+v*0.5
    assert np.allclose(rows[-1, 2:4], (700.0, 340.0), atol=5.0)


def test_track_cli_overrides_beat_the_config_file(tmp_path):
    run_synth_linear(tmp_path)
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n_buffer = 16\nalpha = 30\nseeds = 0:640:360\n")
    out = tmp_path / "run"
    assert main(["track", "--events", str(tmp_path / "events.csv"),
                 "--config", str(cfg), "--out-dir", str(out),
                 "--set", "n_buffer=4"]) == 0
    meta = io.read_metadata(out / "tracks.csv")
    assert meta["n_buffer"] == "4"
    assert meta["alpha"] == "30.0"


def test_track_mode_flag(tmp_path):
    run_synth_linear(tmp_path)
    out = tmp_path / "run"
    assert main(["track", "--events", str(tmp_path / "events.csv"),
                 "--out-dir", str(out), "--mode", "non_flicker",
                 "--set", "seeds=0:640:360"]) == 0
    rows, columns, meta = io.read_tracks(out / "tracks.csv")
    assert meta["mode"] == "non_flicker"
    assert len(columns) == 22


def test_track_unknown_config_key_fails_cleanly(tmp_path, capsys):
    run_synth_linear(tmp_path)
    code = main(["track", "--events", str(tmp_path / "events.csv"),
                 "--out-dir", str(tmp_path), "--set", "bufsize=9"])
    assert code == 2
    assert "config error" in capsys.readouterr().err


def write_two_track_csv(path):
    """Hand-built tracks.csv: track 0 fixed, track 1 receding to the right."""
    meta = {"mode": "flicker", "focal": "1000.0", "cx": "0.0", "cy": "0.0"}
    times = np.arange(5) * 100_000.0
    rows = []
    for k, t in enumerate(times):
        state0 = [100.0, 100.0, 0.0, 0.0, 0.0, 0.0, 30.0, 24.0]
        state1 = [200.0 + 10.0 * k * 0.1, 100.0, 10.0, 0.0, 0.0, 0.0, 6.0, 6.0]
        rows.append([t, 0] + state0 + [1.0] * 8)
        rows.append([t + 1, 1] + state1 + [1.0] * 8)
    with io.TrackWriter(path, "flicker", meta) as writer:
        writer.write(np.asarray(rows))


def test_ttc_command(tmp_path, capsys):
    tracks_path = tmp_path / "tracks.csv"
    write_two_track_csv(tracks_path)
    assert main(["ttc", "--tracks", str(tracks_path), "--pair", "0:1",
                 "--out-dir", str(tmp_path)]) == 0
    out = tmp_path / "ttc_0_1.csv"
    assert out.exists()
    import pandas as pd
    frame = pd.read_csv(out, comment="#")
    assert frame.shape[0] > 0
    # separation ~100 px growing at 10 px/s
    assert frame["inv_tau"].iloc[-1] == pytest.approx(10.0 / 104.0, rel=0.05)
    assert "TTC samples" in capsys.readouterr().out


def test_range_command_uses_metadata_intrinsics(tmp_path):
    tracks_path = tmp_path / "tracks.csv"
    write_two_track_csv(tracks_path)
    assert main(["range", "--tracks", str(tracks_path), "--target", "0:0.3",
                 "--out-dir", str(tmp_path)]) == 0
    import pandas as pd
    frame = pd.read_csv(tmp_path / "range_0.csv", comment="#")
    # lam = (30, 24) px, diameter 0.3 m, f = 1000 px -> 10 m throughout
    assert np.allclose(frame["range_m"], 10.0)
    assert (frame["track_id"] == 0).all()


def test_bench_command(tmp_path, capsys):
    assert main(["bench", "--sizes", "2000,4000",
                 "--out-dir", str(tmp_path)]) == 0
    text = (tmp_path / "bench.csv").read_text()
    assert text.startswith("# scaling_exponent=")
    assert len(text.strip().splitlines()) == 4   # header comment + cols + 2 rows
    out = capsys.readouterr().out
    assert "Mev/s" in out
    assert "scaling exponent" in out


def test_subcommand_is_required():
    with pytest.raises(SystemExit):
        main([])


def test_param_must_be_key_value(tmp_path):
    with pytest.raises(SystemExit):
        main(["synth", "--scenario", "linear", "--out-dir", str(tmp_path),
              "--param", "duration"])
