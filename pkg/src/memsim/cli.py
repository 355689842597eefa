"""Command-line front end.

    memsim run --config c.json --out d/ [--seed N] [--oracle] [--jobs N] [--set k=v ...]
    memsim sweep --config c.json --out d/ --axis mise.interval=[1000000,5000000] ...
    memsim compare a/summary.json b/summary.json [--out cmp.csv]
    memsim gen-trace --out t.trace [--footprint-bytes N ...]

Exit codes: 0 success, 1 runtime failure, 2 invalid input (an error JSON with
the offending paths goes to stderr).
"""
from __future__ import annotations

import argparse
import itertools
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Sequence

from .config import SCHEMA_VERSION, load_config, parse_value
from .errors import ConfigError, MemsimError
from .report import compare_table, execute, format_table, write_outputs, write_sweep, _write_csv
from .trace import SyntheticWorkloadSpec, generate_trace, write_trace

log = logging.getLogger("memsim")


class UsageError(Exception):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(f"{p}: {m}" for p, m in self.problems))


def _error(kind: str, problems) -> int:
    doc = {"error": kind, "problems": [{"path": p, "message": m} for p, m in problems]}
    print(json.dumps(doc, sort_keys=True), file=sys.stderr)
    return 2


def _setup_logging():
    level = os.environ.get("MEMSIM_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


# ----------------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = load_config(args.config, args.set or [], args.seed)
    exp = execute(cfg, oracle=args.oracle, jobs=args.jobs)
    summary = write_outputs(exp, args.out)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def parse_axes(texts: Sequence[str]):
    """``path=[v1,v2]`` or ``path=v1,v2`` -> [(path, [values])]; duplicates rejected."""
    axes, seen, problems = [], set(), []
    for t in texts:
        if "=" not in t:
            problems.append((t, "axis must look like path=[v1,v2,...]"))
            continue
        path, raw = (s.strip() for s in t.split("=", 1))
        vals = parse_value(raw)
        if not isinstance(vals, list):
            vals = [parse_value(v.strip()) for v in raw.split(",")]
        if path in seen:
            problems.append((path, "duplicate sweep axis"))
        elif not vals:
            problems.append((path, "axis has no values"))
        seen.add(path)
        axes.append((path, vals))
    if problems:
        raise UsageError(problems)
    return axes


def _sweep_point(task):
    config, overrides, seed, oracle, out = task
    try:
        cfg = load_config(config, overrides, seed)
        summary = write_outputs(execute(cfg, oracle=oracle), out)
        return "ok", summary
    except (ConfigError, MemsimError, ValueError, ArithmeticError) as e:
        log.warning("sweep point %s failed: %s", out, e)
        return f"failed: {e}".replace(",", ";").replace("\n", " "), None


def cmd_sweep(args) -> int:
    axes = []
    if args.spec:
        with open(args.spec) as f:
            doc = json.load(f)
        raw = doc.get("axes", {})
        pairs = raw.items() if isinstance(raw, dict) else [tuple(p) for p in raw]
        axes += [f"{p}={json.dumps(v)}" for p, v in pairs]
    axes = parse_axes(axes + (args.axis or []))
    # validate the base config and every axis path up front
    load_config(args.config, args.set or [], args.seed)
    paths = [p for p, _ in axes]
    combos = list(itertools.product(*[v for _, v in axes])) if axes else [()]
    for p, vals in axes:
        load_config(args.config, (args.set or []) + [(p, vals[0])], args.seed)
    os.makedirs(args.out, exist_ok=True)
    tasks = []
    for i, combo in enumerate(combos):
        sub = os.path.join(args.out, f"point_{i:03d}")
        tasks.append((args.config, (args.set or []) + list(zip(paths, combo)), args.seed,
                      args.oracle, sub))
    if args.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            outs = list(ex.map(_sweep_point, tasks))
    else:
        outs = [_sweep_point(t) for t in tasks]
    points = [{"values": list(c), "dir": os.path.basename(t[4]), "status": st, "summary": s}
              for c, t, (st, s) in zip(combos, tasks, outs)]
    write_sweep(os.path.join(args.out, "sweep.csv"), paths, points)
    with open(os.path.join(args.out, "sweep.csv")) as f:
        sys.stdout.write(f.read())
    return 0 if all(p["status"] == "ok" for p in points) else 1


def cmd_compare(args) -> int:
    if len(args.summaries) < 2:
        raise UsageError([("summaries", "at least two summary.json files are required")])
    docs = []
    for p in args.summaries:
        try:
            with open(p) as f:
                docs.append(json.load(f))
        except (OSError, ValueError) as e:
            raise UsageError([(p, f"cannot read summary: {e}")])
    versions = {d.get("schema_version") for d in docs}
    if len(versions) != 1 or SCHEMA_VERSION not in versions:
        raise UsageError([("schema_version", f"mismatched schema versions {sorted(map(str, versions))}")])
    labels = args.labels.split(",") if args.labels else [
        os.path.basename(os.path.dirname(os.path.abspath(p))) or p for p in args.summaries]
    header, rows = compare_table(docs, labels)
    if args.out:
        _write_csv(args.out, header, rows)
    print(format_table(header, rows))
    return 0


def cmd_gen_trace(args) -> int:
    spec = SyntheticWorkloadSpec(
        footprint_bytes=args.footprint_bytes, stride_bytes=args.stride_bytes,
        compute_gap=args.compute_gap, record_count=args.records,
        reuse_fraction=args.reuse_fraction, seed=args.seed, hot_bytes=args.hot_bytes)
    try:
        spec.validate()
    except ValueError as e:
        raise UsageError([("gen-trace", str(e))])
    tr = generate_trace(spec)
    if args.out == "-":
        write_trace(tr, sys.stdout)
    else:
        with open(args.out, "w") as f:
            write_trace(tr, f)
    return 0


# ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="memsim", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("--config", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--oracle", action="store_true", help="run alone runs and compute errors")
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--set", action="append", metavar="K=V", help="dotted-path override")

    p = sub.add_parser("run", help="simulate one configuration")
    common(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("sweep", help="Cartesian sweep over config paths")
    common(p)
    p.add_argument("--axis", action="append", metavar="PATH=[V,...]")
    p.add_argument("--spec", help='JSON file with {"axes": {path: [values]}}')
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("compare", help="side-by-side summary metrics")
    p.add_argument("summaries", nargs="*")
    p.add_argument("--out")
    p.add_argument("--labels", help="comma-separated labels")
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("gen-trace", help="write a synthetic trace")
    d = SyntheticWorkloadSpec()
    p.add_argument("--out", required=True, help="trace path or - for stdout")
    p.add_argument("--footprint-bytes", type=int, default=d.footprint_bytes)
    p.add_argument("--stride-bytes", type=int, default=d.stride_bytes)
    p.add_argument("--compute-gap", type=int, default=d.compute_gap)
    p.add_argument("--records", type=int, default=d.record_count)
    p.add_argument("--reuse-fraction", type=float, default=d.reuse_fraction)
    p.add_argument("--hot-bytes", type=int, default=d.hot_bytes)
    p.add_argument("--seed", type=int, default=d.seed)
    p.set_defaults(fn=cmd_gen_trace)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        return _error("config", e.problems)
    except UsageError as e:
        return _error("usage", e.problems)
    except MemsimError as e:
        print(json.dumps({"error": "runtime", "problems": [{"path": "", "message": str(e)}]}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
