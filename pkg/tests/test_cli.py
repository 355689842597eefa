import csv
import json

import pytest

from memsim.cli import main, parse_axes, UsageError


def write_cfg(tmp_path, **extra):
    body = {"run_length_cycles": 300_000, "apps": [{"synthetic": {"compute_gap": 2}},
                                                   {"synthetic": {"compute_gap": 20}}],
            "oracle": {"window_cycles": 100_000}}
    body.update(extra)
    p = tmp_path / "c.json"
    p.write_text(json.dumps(body))
    return str(p)


def read_csv(path):
    with open(path) as f:
        return list(csv.DictReader(f))


def test_run_writes_artifacts(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "d"
    assert main(["run", "--config", cfg, "--out", str(out), "--seed", "7"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["seed"] == 7 and summary["n_apps"] == 2
    for name in ("summary.json", "slowdowns.csv", "intervals.csv", "streaks.csv"):
        assert (out / name).exists()
    assert json.loads((out / "summary.json").read_text()) == summary


def test_run_oracle_columns(tmp_path, capsys):
    cfg = write_cfg(tmp_path, model="mise", mise={"interval": 100_000})
    out = tmp_path / "d"
    assert main(["run", "--config", cfg, "--out", str(out), "--oracle"]) == 0
    rows = read_csv(out / "slowdowns.csv")
    assert list(rows[0]) == ["app", "window", "ipc_alone", "ipc_shared", "actual", "estimated",
                             "error_pct"]
    assert len(rows) == 6 and all(float(r["actual"]) >= 0.99 for r in rows)
    s = json.loads(capsys.readouterr().out)
    assert s["mean_error_pct"] is not None


def test_missing_trace_exit_2(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"apps": [{"trace": "nope.trace"}]}))
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "d")]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["problems"][0]["path"] == "apps.0.trace"
    assert "nope.trace" in err["problems"][0]["message"]


def test_malformed_trace_exit_2(tmp_path, capsys):
    (tmp_path / "bad.trace").write_text("1 0x0 R\n2 0x40 Q\n")
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"apps": [{"trace": "bad.trace"}]}))
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "d")]) == 2
    msg = json.loads(capsys.readouterr().err)["problems"][0]["message"]
    assert "bad.trace" in msg and "line 2" in msg


def test_sweep_grid(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "sw"
    rc = main(["sweep", "--config", cfg, "--out", str(out), "--axis", "scheduler.policy=[\"frfcfs\",\"bliss\"]",
               "--axis", "seed=1,2"])
    assert rc == 0
    rows = read_csv(out / "sweep.csv")
    assert len(rows) == 4 and {r["status"] for r in rows} == {"ok"}
    assert [(r["scheduler.policy"], r["seed"]) for r in rows] == [
        ("frfcfs", "1"), ("frfcfs", "2"), ("bliss", "1"), ("bliss", "2")]
    assert (out / "point_003" / "summary.json").exists()


def test_sweep_empty_axes_runs_base(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "sw")]) == 0
    assert len(read_csv(tmp_path / "sw" / "sweep.csv")) == 1


def test_sweep_spec_file_and_bad_path(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps({"axes": {"dram.timing.tCL": [8, 9]}}))
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "a"), "--spec", str(spec)]) == 0
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "b"),
                 "--axis", "dram.bogus=[1]"]) == 2


def test_duplicate_axis():
    with pytest.raises(UsageError):
        parse_axes(["seed=[1]", "seed=[2]"])
    with pytest.raises(UsageError):
        parse_axes(["seed=[]"])
    assert parse_axes(["mise.interval=[1000000,5000000]"]) == [("mise.interval", [1000000, 5000000])]


def test_compare(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    for d in ("a", "b"):
        main(["run", "--config", cfg, "--out", str(tmp_path / d)])
    capsys.readouterr()
    out = tmp_path / "cmp.csv"
    assert main(["compare", str(tmp_path / "a" / "summary.json"),
                 str(tmp_path / "b" / "summary.json"), "--out", str(out)]) == 0
    rows = read_csv(out)
    deltas = [v for r in rows for k, v in r.items() if k.endswith("_delta_pct") and v]
    assert deltas and all(float(v) == 0.0 for v in deltas)
    assert main(["compare", str(tmp_path / "a" / "summary.json")]) == 2


def test_gen_trace(tmp_path, capsys):
    out = tmp_path / "t.trace"
    assert main(["gen-trace", "--out", str(out), "--records", "3", "--compute-gap", "10"]) == 0
    assert out.read_text() == "10 0x0 R\n10 0x40 R\n10 0x80 R\n"
    assert main(["gen-trace", "--out", "-", "--records", "1"]) == 0
    assert capsys.readouterr().out.count("\n") == 1
    assert main(["gen-trace", "--out", "-", "--footprint-bytes", "0"]) == 2
