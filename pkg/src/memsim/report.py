"""Experiment execution and artifact writers.

An experiment is one shared run plus, optionally, the alone-run oracle. All
artifacts are deterministic functions of the config and seed: no timestamps,
fixed float formatting, fixed row order.
"""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from typing import List

from .config import SCHEMA_VERSION, SimConfig
from .metrics import (SlowdownRecord, StreakHistogram, app_totals, build_records,
                      harmonic_speedup, maximum_slowdown, run_alone_oracle, summarize_errors,
                      weighted_speedup)
from .simloop import INTERVAL_COLUMNS, RunResult, run

SLOWDOWN_COLUMNS = ["app", "window", "ipc_alone", "ipc_shared", "actual", "estimated", "error_pct"]
STREAK_COLUMNS = ["app", "length_bucket", "count", "total_length"]


@dataclass
class Experiment:
    cfg: SimConfig
    result: RunResult
    records: List[SlowdownRecord] = field(default_factory=list)
    totals: List[SlowdownRecord] = field(default_factory=list)
    oracle: bool = False
    flags: List[str] = field(default_factory=list)

    @property
    def warmup(self) -> int:
        return self.cfg.oracle.warmup_windows

    def summary(self) -> dict:
        r, cfg = self.result, self.cfg
        per_app, overall = summarize_errors(self.records, self.warmup)
        ws = hs = mx = None
        if self.totals:
            ws = weighted_speedup(self.totals)
            hs = harmonic_speedup(self.totals)
            mx = maximum_slowdown(self.totals)
        est = {}
        for a in range(r.n_apps):
            vals = [row[a] for w, row in enumerate(r.estimates)
                    if w >= self.warmup and row[a] is not None]
            est[str(a)] = _num(sum(vals) / len(vals)) if vals else None
        hist = StreakHistogram.from_arrays(r.streak_hist, r.streak_sum)
        return {
            "schema_version": SCHEMA_VERSION,
            "config_hash": cfg.config_hash(),
            "seed": cfg.seed,
            "model": cfg.model,
            "scheduler": cfg.scheduler.policy,
            "policy": cfg.policy.kind,
            "n_apps": r.n_apps,
            "cycles": r.cycles,
            "windows": len(r.window_ends),
            "warmup_windows": self.warmup,
            "ipc": [_num(x) for x in r.ipc],
            "ipc_sum": _num(float(r.ipc.sum())),
            "weighted_speedup": _num(ws),
            "harmonic_speedup": _num(hs),
            "max_slowdown": _num(mx),
            "actual_slowdown": {str(t.app): _num(t.actual_slowdown) for t in self.totals},
            "mean_estimated_slowdown": est,
            "mean_error_pct": _num(overall),
            "mean_error_pct_per_app": {str(a): _num(v) for a, v in per_app.items()},
            "mean_streak_length": {str(a): _num(hist.mean_length(a)) for a in range(r.n_apps)},
            "monitors": r.monitors,
            "flags": sorted(set(self.flags + r.flags)),
        }


def _num(x, digits=9):
    if x is None:
        return None
    x = float(x)
    if not math.isfinite(x):
        return None
    return round(x, digits)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        if not math.isfinite(x):
            return "inf" if x > 0 else "nan"
        return f"{x:.6f}"
    return str(x)


def execute(cfg: SimConfig, oracle: bool = False, jobs: int = 1) -> Experiment:
    result = run(cfg)
    exp = Experiment(cfg, result, oracle=oracle)
    if oracle:
        windows, flags = run_alone_oracle(cfg, result, jobs=jobs)
        exp.records = build_records(result, windows)
        exp.totals = app_totals(windows, exp.warmup)
        exp.flags += flags
    return exp


def _write_csv(path: str, header: List[str], rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_outputs(exp: Experiment, out_dir: str) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    r = exp.result
    summary = exp.summary()
    with open(os.path.join(out_dir, "summary.json"), "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")

    if exp.oracle:
        rows = [(s.app, s.window, s.ipc_alone, s.ipc_shared, s.actual_slowdown,
                 s.estimated_slowdown, s.error_percent) for s in exp.records]
    else:
        # no alone runs: shared IPC and estimates only
        rows = []
        for a in range(r.n_apps):
            start = 0
            for w, end in enumerate(r.window_ends):
                ipc = (r.window_retired[w + 1, a] - r.window_retired[w, a]) / (end - start)
                rows.append((a, w, None, float(ipc), None, r.estimates[w][a], None))
                start = end
    _write_csv(os.path.join(out_dir, "slowdowns.csv"), SLOWDOWN_COLUMNS, rows)

    _write_csv(os.path.join(out_dir, "intervals.csv"), INTERVAL_COLUMNS,
               [[row[c] for c in INTERVAL_COLUMNS] for row in r.interval_rows])

    srows = []
    for a in range(r.n_apps):
        for b in range(1, r.streak_hist.shape[1]):
            if r.streak_hist[a, b]:
                srows.append((a, b, int(r.streak_hist[a, b]), int(r.streak_sum[a, b])))
    _write_csv(os.path.join(out_dir, "streaks.csv"), STREAK_COLUMNS, srows)
    return summary


SWEEP_METRICS = ["ipc_sum", "weighted_speedup", "harmonic_speedup", "max_slowdown", "mean_error_pct"]


def write_sweep(path: str, axes: List[str], points: List[dict]) -> None:
    """``points``: dicts with 'values' (per axis), 'dir', 'status', 'summary'."""
    header = ["point"] + axes + ["status"] + SWEEP_METRICS + ["dir"]
    rows = []
    for i, p in enumerate(points):
        s = p.get("summary") or {}
        rows.append([i] + [v if isinstance(v, str) else json.dumps(v) for v in p["values"]]
                    + [p["status"]]
                    + [s.get(m) for m in SWEEP_METRICS] + [p["dir"]])
    _write_csv(path, header, rows)


COMPARE_METRICS = ["ipc_sum", "weighted_speedup", "harmonic_speedup", "max_slowdown", "mean_error_pct"]


def compare_table(summaries: List[dict], labels: List[str]):
    """Rows of (label, metric values..., percent deltas vs the first entry...)."""
    header = ["label"] + COMPARE_METRICS + [f"{m}_delta_pct" for m in COMPARE_METRICS]
    base = summaries[0]
    rows = []
    for lab, s in zip(labels, summaries):
        vals = [s.get(m) for m in COMPARE_METRICS]
        deltas = []
        for m, v in zip(COMPARE_METRICS, vals):
            b = base.get(m)
            deltas.append(None if v is None or b in (None, 0) else (v - b) / b * 100.0)
        rows.append([lab] + vals + deltas)
    return header, rows


def format_table(header, rows) -> str:
    cells = [header] + [[_fmt(v) for v in r] for r in rows]
    widths = [max(len(str(r[i])) for r in cells) for i in range(len(header))]
    return "\n".join("  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip()
                     for r in cells)
