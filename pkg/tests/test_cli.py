"""CLI behavior: subcommands, config merging, exit codes."""

import json

import pytest

import helpers as H
from dlmdecode import DecodeTrace
from dlmdecode.cli import EXIT_CONFIG, EXIT_DENOISER, EXIT_IO, EXIT_OK, main


@pytest.fixture
def model_file(tmp_path):
    path = tmp_path / "model.json"
    path.write_text(json.dumps({
        "vocab": {"size": 40, "mask_id": 39, "eot_id": 38},
        "target": list(H.make_target(16, 8)),
        "noise_vocab": list(H.NOISE),
        "eot_boost": 0.2,
    }))
    return str(path)


@pytest.fixture
def anchor_file(tmp_path):
    path = tmp_path / "anchor.json"
    path.write_text(json.dumps({"tokens": [3, 5], "offset_from_end": 4}))
    return str(path)


def run(argv):
    return main(argv)


def test_decode_writes_trace_and_summary(tmp_path, model_file, capsys):
    trace_path = tmp_path / "run.trace"
    code = run([
        "decode", "--model", f"synthetic:{model_file}",
        "--length", "16", "--steps", "8", "--trace", str(trace_path),
    ])
    assert code == EXIT_OK
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 1
    summary = json.loads(out[0])
    assert summary["seed"] == 0
    assert summary["length"] == 16
    assert summary["steps"] == 8
    assert summary["trace"] == str(trace_path)
    assert 0.0 <= summary["eot_ratio"] <= 1.0
    trace = DecodeTrace.read(str(trace_path))
    assert trace.header["L"] == 16
    assert len(trace.steps) == 8


def test_decode_steps_default_to_half_length(model_file, capsys):
    code = run(["decode", "--model", f"synthetic:{model_file}", "--length", "16"])
    assert code == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["steps"] == 8


def test_decode_anchor_enables_modulation(tmp_path, model_file, anchor_file, capsys):
    trace_path = tmp_path / "a.trace"
    code = run([
        "decode", "--model", f"synthetic:{model_file}", "--length", "16",
        "--anchor-file", anchor_file, "--trace", str(trace_path),
    ])
    assert code == EXIT_OK
    header = DecodeTrace.read(str(trace_path)).header
    assert header["modulation"] is True
    assert header["kappa"] == 14.0
    assert header["anchor_tokens"] == [3, 5]

    # and --no-modulation turns it back off
    code = run([
        "decode", "--model", f"synthetic:{model_file}", "--length", "16",
        "--anchor-file", anchor_file, "--no-modulation", "--trace", str(trace_path),
    ])
    assert code == EXIT_OK
    header = DecodeTrace.read(str(trace_path)).header
    assert header["modulation"] is False


def test_decode_strategy_aliases(tmp_path, model_file, capsys):
    trace_path = tmp_path / "s.trace"
    code = run([
        "decode", "--model", f"synthetic:{model_file}", "--length", "16",
        "--strategy", "top-prob", "--trace", str(trace_path),
    ])
    assert code == EXIT_OK
    assert DecodeTrace.read(str(trace_path)).header["strategy"] == "top_probability"


def test_decode_multi_seed_writes_one_trace_per_seed(tmp_path, model_file, capsys):
    trace_path = tmp_path / "m.trace"
    code = run([
        "decode", "--model", f"synthetic:{model_file}", "--length", "16",
        "--seeds", "3,9", "--trace", str(trace_path), "--tie-break", "random",
    ])
    assert code == EXIT_OK
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 2
    paths = [json.loads(line)["trace"] for line in out]
    assert paths == [str(tmp_path / "m.s3.trace"), str(tmp_path / "m.s9.trace")]
    for path, seed in zip(paths, (3, 9)):
        assert DecodeTrace.read(path).header["seed"] == seed


def test_decode_repeat_consecutive_seeds(model_file, capsys):
    code = run([
        "decode", "--model", f"synthetic:{model_file}", "--length", "16",
        "--seed", "5", "--repeat", "3",
    ])
    assert code == EXIT_OK
    seeds = [json.loads(line)["seed"] for line in capsys.readouterr().out.strip().splitlines()]
    assert seeds == [5, 6, 7]


def test_config_file_supplies_values_flags_override(tmp_path, model_file, capsys):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({
        "model": f"synthetic:{model_file}",
        "length": 16,
        "steps": 4,
        "eot_suppression": True,
    }))
    trace_path = tmp_path / "c.trace"
    code = run(["decode", "--config", str(config), "--steps", "8", "--trace", str(trace_path)])
    assert code == EXIT_OK
    header = DecodeTrace.read(str(trace_path)).header
    assert header["steps"] == 8  # flag beats file
    assert header["eot_suppression"] is True  # file beats default


def test_config_file_rejects_unknown_keys(tmp_path, model_file, capsys):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"model": f"synthetic:{model_file}", "lenght": 16}))
    assert run(["decode", "--config", str(config)]) == EXIT_CONFIG
    assert "lenght" in capsys.readouterr().err


def test_record_table_then_replay(tmp_path, model_file, capsys):
    table_path = tmp_path / "table.json"
    trace_a = tmp_path / "live.trace"
    code = run([
        "decode", "--model", f"synthetic:{model_file}", "--length", "16",
        "--trace", str(trace_a), "--record-table", str(table_path),
    ])
    assert code == EXIT_OK
    trace_b = tmp_path / "replay.trace"
    code = run([
        "decode", "--model", f"table:{table_path}", "--length", "16",
        "--trace", str(trace_b),
    ])
    assert code == EXIT_OK
    live = DecodeTrace.read(str(trace_a))
    replayed = DecodeTrace.read(str(trace_b))
    assert replayed.step_text() == live.step_text()


def test_exit_code_config_errors(model_file, capsys):
    assert run(["decode", "--length", "16"]) == EXIT_CONFIG  # no model
    assert run(["decode", "--model", f"synthetic:{model_file}"]) == EXIT_CONFIG  # no length
    assert run(["decode", "--model", f"synthetic:{model_file}", "--length", "16",
                "--strategy", "entropy"]) == EXIT_CONFIG
    assert run(["decode", "--bogus-flag"]) == EXIT_CONFIG  # argparse remapped
    assert run(["decode", "--model", f"synthetic:{model_file}", "--length", "16",
                "--steps", "99"]) == EXIT_CONFIG


def test_exit_code_denoiser_errors(tmp_path, model_file, capsys):
    # a table recorded at length 16 has no entry for a length-12 request
    table_path = tmp_path / "table.json"
    run([
        "decode", "--model", f"synthetic:{model_file}", "--length", "16",
        "--record-table", str(table_path),
    ])
    code = run(["decode", "--model", f"table:{table_path}", "--length", "12"])
    assert code == EXIT_DENOISER
    assert "unknown_state" in capsys.readouterr().err


def test_exit_code_io_errors(tmp_path, model_file, capsys):
    missing = tmp_path / "nope.trace"
    assert run(["stats", str(missing)]) == EXIT_IO
    bad = tmp_path / "bad.trace"
    bad.write_text("not json\n")
    assert run(["stats", str(bad)]) == EXIT_IO
    # unwritable trace destination
    code = run([
        "decode", "--model", f"synthetic:{model_file}", "--length", "16",
        "--trace", str(tmp_path / "no-such-dir" / "x.trace"),
    ])
    assert code == EXIT_IO


def test_stats_jsonl(tmp_path, model_file, capsys):
    trace_path = tmp_path / "s.trace"
    run(["decode", "--model", f"synthetic:{model_file}", "--length", "16",
         "--trace", str(trace_path)])
    capsys.readouterr()
    code = run(["stats", str(trace_path), "--bins", "4"])
    assert code == EXIT_OK
    record = json.loads(capsys.readouterr().out)
    assert record["trace"] == str(trace_path)
    assert record["L"] == 16
    assert record["bin_count"] == 4
    assert len(record["histogram"]) == 4
    assert record["eot_ratio"] is not None


def test_stats_csv(tmp_path, model_file, capsys):
    trace_path = tmp_path / "s.trace"
    run(["decode", "--model", f"synthetic:{model_file}", "--length", "16",
         "--trace", str(trace_path)])
    capsys.readouterr()
    out_path = tmp_path / "stats.csv"
    code = run(["stats", str(trace_path), "--bins", "4", "--format", "csv",
                "--out", str(out_path)])
    assert code == EXIT_OK
    rows = out_path.read_text().strip().splitlines()
    assert rows[0] == "trace,bin,fraction,anchor_bin,eot_ratio"
    assert len(rows) == 5


def test_stats_compare(tmp_path, model_file, anchor_file, capsys):
    a = tmp_path / "a.trace"
    b = tmp_path / "b.trace"
    run(["decode", "--model", f"synthetic:{model_file}", "--length", "16", "--trace", str(a)])
    run(["decode", "--model", f"synthetic:{model_file}", "--length", "16",
         "--anchor-file", anchor_file, "--trace", str(b)])
    capsys.readouterr()
    code = run(["stats", str(a), str(b), "--compare", "--bins", "4"])
    assert code == EXIT_OK
    record = json.loads(capsys.readouterr().out)
    assert record["trace_a"] == str(a)
    assert record["trace_b"] == str(b)
    assert record["eot_ratio_delta"] == pytest.approx(
        record["eot_ratio_b"] - record["eot_ratio_a"]
    )
    assert len(record["decided_at_delta"]) == 16

    assert run(["stats", str(a), "--compare"]) == EXIT_CONFIG


def test_sweep_csv_covers_grid(tmp_path, model_file, anchor_file, capsys):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"kappa": [12, 14], "beta": [1.0], "gamma": [0.85]}))
    out_path = tmp_path / "sweep.csv"
    code = run([
        "sweep", "--model", f"synthetic:{model_file}", "--length", "16",
        "--anchor-file", anchor_file, "--grid", str(grid),
        "--bins", "4", "--out", str(out_path),
    ])
    assert code == EXIT_OK
    rows = out_path.read_text().strip().splitlines()
    assert rows[0] == "kappa,beta,gamma,runs,failures,eot_ratio,anchor_mass_ratio,runtime_s"
    assert len(rows) == 3  # header + 2 cells
    for row in rows[1:]:
        fields = row.split(",")
        assert fields[3] == "1"  # runs
        assert fields[4] == "0"  # failures


def test_sweep_default_grid_is_36_cells(tmp_path, model_file, anchor_file):
    out_path = tmp_path / "sweep.csv"
    code = run([
        "sweep", "--model", f"synthetic:{model_file}", "--length", "16",
        "--anchor-file", anchor_file, "--bins", "4", "--out", str(out_path),
    ])
    assert code == EXIT_OK
    rows = out_path.read_text().strip().splitlines()
    assert len(rows) == 1 + 2 * 6 * 3


def test_sweep_counts_failures(tmp_path, model_file, capsys):
    # anchor that does not fit the region: every cell fails, command still exits 0
    anchor = tmp_path / "anchor.json"
    anchor.write_text(json.dumps({"tokens": [3, 5], "offset_from_end": 40}))
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"kappa": [14], "beta": [1.3], "gamma": [0.85]}))
    out_path = tmp_path / "sweep.csv"
    code = run([
        "sweep", "--model", f"synthetic:{model_file}", "--length", "16",
        "--anchor-file", str(anchor), "--grid", str(grid), "--out", str(out_path),
    ])
    assert code == EXIT_OK
    rows = out_path.read_text().strip().splitlines()
    assert rows[1].split(",")[4] == "1"
    assert "failed" in capsys.readouterr().err
