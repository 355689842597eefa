"""Experiment configuration: JSON documents, dotted overrides, validation.

The canonical form is a nested dict (see ``DEFAULTS``). ``build`` turns it into
a typed :class:`SimConfig`, collecting every problem with its dotted path
before raising :class:`ConfigError`.
"""
from __future__ import annotations

import copy
import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from .asm import AsmConfig
from .cache import CacheConfig
from .core import CoreConfig
from .dram import DramConfig, DramTiming, Interleaving
from .errors import ConfigError, TraceParseError
from .mise import MiseConfig
from .sched import POLICIES
from .trace import SyntheticWorkloadSpec, Trace, generate_trace, load_trace

SCHEMA_VERSION = 1

MODELS = ("none", "mise", "asm")
POLICY_KINDS = ("none", "mise_qos", "mise_fair", "asm_mem", "asm_cache", "asm_qos",
                "asm_cache_mem", "always_prioritize")
POLICY_MODEL = {"mise_qos": "mise", "mise_fair": "mise", "asm_mem": "asm", "asm_cache": "asm",
                "asm_qos": "asm", "asm_cache_mem": "asm"}

DEFAULTS: Dict[str, Any] = {
    "schema_version": SCHEMA_VERSION,
    "seed": 1,
    "run_length_cycles": 10_000_000,
    "core": {"issue_width": 3, "window_size": 128, "mshr_count": 8, "l1_hit_latency_cycles": 1},
    "l1": {"capacity_bytes": 32 * 1024, "associativity": 4},
    "llc": {"capacity_bytes": 2 * 1024 * 1024, "associativity": 16, "hit_latency_cycles": 20,
            "shared": True},
    "dram": {
        "channels": 1, "ranks_per_channel": 1, "banks_per_rank": 8, "row_bytes": 8192,
        "timing": {"tRCD": 8, "tRP": 8, "tCL": 8, "tCCD": 4, "tRAS": 20, "burst_cycles": 4},
        "interleaving": {"kind": "row", "blocks_per_stripe": 4},
    },
    "scheduler": {
        "policy": "frfcfs", "cap": 4, "bliss_threshold": 4, "bliss_clearing_interval": 10_000,
        "grouping_threshold_mpki": 5.0, "grouping_window": 5_000_000,
        "overlay_epoch_priority": None, "queue_capacity": 128,
    },
    "model": "none",
    "mise": {"interval": 5_000_000, "epoch": 10_000, "alpha_threshold": 0.7},
    "asm": {"quantum": 5_000_000, "epoch": 10_000, "sampled_sets": 64},
    "policy": {"kind": "none", "aoi": [0], "bound": 2.0, "step": 0.02, "patience": 10,
               "history_intervals": 3, "tighten": 0.95, "loosen": 1.05},
    "oracle": {"sample_period": 100_000, "window_cycles": 1_000_000, "warmup_windows": 1},
    "service_log": 0,
    "apps": [],
}

SYNTH_KEYS = set(SyntheticWorkloadSpec.__dataclass_fields__)


@dataclass
class SchedulerConfig:
    policy: str = "frfcfs"
    cap: int = 4
    bliss_threshold: int = 4
    bliss_clearing_interval: int = 10_000
    grouping_threshold_mpki: float = 5.0
    grouping_window: int = 5_000_000
    overlay_epoch_priority: Optional[bool] = None
    queue_capacity: int = 128


@dataclass
class PolicyConfig:
    kind: str = "none"
    aoi: List[int] = field(default_factory=lambda: [0])
    bound: float = 2.0
    step: float = 0.02
    patience: int = 10
    history_intervals: int = 3
    tighten: float = 0.95
    loosen: float = 1.05


@dataclass
class OracleConfig:
    sample_period: int = 100_000
    window_cycles: int = 1_000_000
    warmup_windows: int = 1


@dataclass
class AppSpec:
    trace_path: Optional[str] = None
    synthetic: Optional[SyntheticWorkloadSpec] = None
    trace: Optional[Trace] = None
    repeat: bool = False

    def load(self) -> Trace:
        if self.trace is None:
            self.trace = (load_trace(self.trace_path) if self.trace_path is not None
                          else generate_trace(self.synthetic))
        return self.trace


@dataclass
class SimConfig:
    core: CoreConfig
    l1: CacheConfig
    llc: Optional[CacheConfig]
    dram: DramConfig
    scheduler: SchedulerConfig
    model: str
    mise: MiseConfig
    asm: AsmConfig
    policy: PolicyConfig
    oracle: OracleConfig
    apps: List[AppSpec]
    run_length_cycles: int
    seed: int
    service_log: int = 0
    raw: Dict[str, Any] = field(default_factory=dict, repr=False)

    @property
    def overlay(self) -> bool:
        o = self.scheduler.overlay_epoch_priority
        return (self.model != "none" or self.policy.kind == "always_prioritize") if o is None else bool(o)

    @property
    def window_cycles(self) -> int:
        """Length of the estimation/reporting window."""
        if self.model == "mise":
            return self.mise.interval_cycles
        if self.model == "asm":
            return self.asm.quantum_cycles
        return self.oracle.window_cycles

    @property
    def epoch_cycles(self) -> int:
        return self.asm.epoch_cycles if self.model == "asm" else self.mise.epoch_cycles

    def config_hash(self) -> str:
        return config_hash(self.raw, [a.load() for a in self.apps])


def _merge(base, user, path, problems):
    out = copy.deepcopy(base)
    for k, v in user.items():
        p = f"{path}.{k}" if path else k
        if k not in base:
            problems.append((p, "unknown key"))
        elif isinstance(base[k], dict) and isinstance(v, dict):
            out[k] = _merge(base[k], v, p, problems)
        elif k == "llc" and v is not None and not isinstance(v, dict):
            problems.append((p, "must be an object or null"))
        else:
            out[k] = v
    return out


def parse_value(text: str):
    try:
        return json.loads(text)
    except ValueError:
        return text


def apply_override(d: Dict[str, Any], path: str, value) -> None:
    """Set ``d[a][b][c] = value`` for ``path`` "a.b.c" (list indices allowed)."""
    keys = path.split(".")
    cur = d
    for i, k in enumerate(keys[:-1]):
        if isinstance(cur, list):
            k = int(k)
            cur = cur[k]
            continue
        if k not in cur or cur[k] is None:
            if k == "llc":
                cur[k] = copy.deepcopy(DEFAULTS["llc"])
            else:
                raise ConfigError([(".".join(keys[:i + 1]), "unknown key")])
        cur = cur[k]
    last = keys[-1]
    if isinstance(cur, list):
        cur[int(last)] = value
    elif last not in cur:
        raise ConfigError([(path, "unknown key")])
    else:
        cur[last] = value


def parse_override(text: str):
    if "=" not in text:
        raise ConfigError([(text, "override must look like key=value")])
    k, v = text.split("=", 1)
    return k.strip(), parse_value(v.strip())


def _int(d, key, path, problems, minimum=None):
    v = d[key]
    if isinstance(v, float) and v.is_integer():
        v = int(v)
    if isinstance(v, bool) or not isinstance(v, int):
        problems.append((f"{path}.{key}" if path else key, "must be an integer"))
        return 0
    if minimum is not None and v < minimum:
        problems.append((f"{path}.{key}" if path else key, f"must be >= {minimum}"))
    return v


def _ints(d, path, problems, keys=None, minimum=None):
    return {k: _int(d, k, path, problems, minimum) for k in (keys or d)}


def normalize(user: Dict[str, Any]) -> Dict[str, Any]:
    """Fill defaults; raises ConfigError on unknown keys."""
    problems = []
    d = _merge(DEFAULTS, user, "", problems)
    if "llc" in user and user["llc"] is None:
        d["llc"] = None
    if problems:
        raise ConfigError(problems)
    return d


def build(d: Dict[str, Any], base_dir: str = ".", traces=None) -> SimConfig:
    """Typed config from a normalized dict; ``traces`` may pre-bind Trace objects."""
    problems = []
    if d.get("schema_version") != SCHEMA_VERSION:
        problems.append(("schema_version", f"expected {SCHEMA_VERSION}"))
    core = CoreConfig(**_ints(d["core"], "core", problems, minimum=1))
    l1 = CacheConfig(**_ints(d["l1"], "l1", problems, minimum=1), shared=False)
    problems += l1.problems("l1")
    llc = None
    if d["llc"] is not None:
        ld = dict(d["llc"])
        ld.setdefault("shared", True)
        extra = set(ld) - {"capacity_bytes", "associativity", "hit_latency_cycles", "shared",
                           "line_bytes"}
        for k in sorted(extra):
            problems.append((f"llc.{k}", "unknown key"))
        vals = _ints({k: ld[k] for k in ("capacity_bytes", "associativity", "hit_latency_cycles")
                      if k in ld}, "llc", problems, minimum=0)
        llc = CacheConfig(**vals, shared=bool(ld["shared"]))
        problems += llc.problems("llc")
    dd = d["dram"]
    dram = DramConfig(
        **_ints(dd, "dram", problems, ["channels", "ranks_per_channel", "banks_per_rank",
                                         "row_bytes"]),
        timing=DramTiming(**_ints(dd["timing"], "dram.timing", problems)),
        interleaving=Interleaving(dd["interleaving"]["kind"],
                                  _int(dd["interleaving"], "blocks_per_stripe",
                                       "dram.interleaving", problems)),
    )
    problems += dram.problems("dram")
    sd = d["scheduler"]
    sched = SchedulerConfig(
        policy=sd["policy"], cap=_int(sd, "cap", "scheduler", problems, 1),
        bliss_threshold=_int(sd, "bliss_threshold", "scheduler", problems, 1),
        bliss_clearing_interval=_int(sd, "bliss_clearing_interval", "scheduler", problems, 1),
        grouping_threshold_mpki=float(sd["grouping_threshold_mpki"]),
        grouping_window=_int(sd, "grouping_window", "scheduler", problems, 1),
        overlay_epoch_priority=sd["overlay_epoch_priority"],
        queue_capacity=_int(sd, "queue_capacity", "scheduler", problems, 1),
    )
    if sched.policy not in POLICIES:
        problems.append(("scheduler.policy", f"unknown policy {sched.policy!r}"))
    model = d["model"]
    if model not in MODELS:
        problems.append(("model", f"must be one of {', '.join(MODELS)}"))
    mise = MiseConfig(_int(d["mise"], "interval", "mise", problems, 1),
                      _int(d["mise"], "epoch", "mise", problems, 1),
                      float(d["mise"]["alpha_threshold"]))
    problems += mise.problems()
    ss = d["asm"]["sampled_sets"]
    asm = AsmConfig(_int(d["asm"], "quantum", "asm", problems, 1),
                    _int(d["asm"], "epoch", "asm", problems, 1),
                    None if ss is None else _int(d["asm"], "sampled_sets", "asm", problems, 0))
    problems += asm.problems()
    pd = d["policy"]
    aoi = pd["aoi"] if isinstance(pd["aoi"], list) else [pd["aoi"]]
    pol = PolicyConfig(pd["kind"], [int(a) for a in aoi], float(pd["bound"]), float(pd["step"]),
                       _int(pd, "patience", "policy", problems, 1),
                       _int(pd, "history_intervals", "policy", problems, 1),
                       float(pd["tighten"]), float(pd["loosen"]))
    if pol.kind not in POLICY_KINDS:
        problems.append(("policy.kind", f"unknown policy {pol.kind!r}"))
    elif pol.kind in POLICY_MODEL and POLICY_MODEL[pol.kind] != model:
        problems.append(("policy.kind", f"{pol.kind} requires model {POLICY_MODEL[pol.kind]}"))
    if pol.kind in ("asm_cache", "asm_qos", "asm_cache_mem") and (llc is None or not llc.shared):
        problems.append(("policy.kind", "cache partitioning needs a shared llc"))
    if model == "asm" and llc is None:
        problems.append(("model", "asm needs an llc"))
    if pol.kind in ("mise_qos", "mise_fair", "asm_qos") and pol.bound <= 1:
        problems.append(("policy.bound", "must be > 1"))
    if not 0 < pol.step < 1:
        problems.append(("policy.step", "must be in (0, 1)"))
    od = d["oracle"]
    oracle = OracleConfig(**_ints(od, "oracle", problems, minimum=0))
    if oracle.sample_period < 1:
        problems.append(("oracle.sample_period", "must be >= 1"))
    if oracle.window_cycles < 1:
        problems.append(("oracle.window_cycles", "must be >= 1"))
    run_length = _int(d, "run_length_cycles", "", problems, 1)
    seed = _int(d, "seed", "", problems, 0)

    apps = []
    if traces is not None:
        apps = [AppSpec(trace=t, repeat=bool(r)) for t, r in traces]
    else:
        if not d["apps"]:
            problems.append(("apps", "at least one app is required"))
        for i, a in enumerate(d["apps"]):
            p = f"apps.{i}"
            if not isinstance(a, dict):
                problems.append((p, "must be an object"))
                continue
            extra = set(a) - {"trace", "synthetic", "repeat"}
            for k in sorted(extra):
                problems.append((f"{p}.{k}", "unknown key"))
            repeat = bool(a.get("repeat", True))
            if ("trace" in a) == ("synthetic" in a):
                problems.append((p, "needs exactly one of trace or synthetic"))
            elif "trace" in a:
                path = a["trace"]
                full = path if os.path.isabs(path) else os.path.join(base_dir, path)
                spec = AppSpec(trace_path=full, repeat=repeat)
                if not os.path.isfile(full):
                    problems.append((f"{p}.trace", f"trace file not found: {path}"))
                else:
                    # parse now so a malformed trace is reported like any other input error
                    try:
                        spec.load()
                    except TraceParseError as e:
                        problems.append((f"{p}.trace", f"{path}: {e}"))
                apps.append(spec)
            else:
                s = dict(a["synthetic"])
                for k in sorted(set(s) - SYNTH_KEYS):
                    problems.append((f"{p}.synthetic.{k}", "unknown key"))
                    s.pop(k)
                s.setdefault("seed", seed * 1000 + i + 1)
                for k, v in s.items():
                    if isinstance(v, float) and v.is_integer() and k != "reuse_fraction":
                        s[k] = int(v)
                spec = SyntheticWorkloadSpec(**s)
                try:
                    spec.validate()
                except ValueError as e:
                    problems.append((f"{p}.synthetic", str(e)))
                apps.append(AppSpec(synthetic=spec, repeat=repeat))
    n = len(apps)
    if model != "none" or pol.kind != "none":
        for a in pol.aoi if pol.kind in ("mise_qos", "asm_qos", "always_prioritize") else []:
            if not 0 <= a < n:
                problems.append(("policy.aoi", f"app {a} does not exist"))
    if model != "none" and run_length < (mise.interval_cycles if model == "mise" else asm.quantum_cycles):
        problems.append(("run_length_cycles", "shorter than one interval/quantum"))
    if n * core.mshr_count > sched.queue_capacity * dram.channels and n:
        problems.append(("scheduler.queue_capacity",
                         "must hold every outstanding miss (apps x mshr_count)"))
    if n > 1 << 8:
        problems.append(("apps", "at most 256 applications"))
    if problems:
        raise ConfigError(problems)
    return SimConfig(core, l1, llc, dram, sched, model, mise, asm, pol, oracle, apps, run_length,
                     seed, _int(d, "service_log", "", problems, 0), raw=d)


def make_config(overrides: Optional[Dict[str, Any]] = None, traces=None, repeat=True,
                user: Optional[Dict[str, Any]] = None) -> SimConfig:
    """Programmatic construction: defaults + ``user`` dict + dotted ``overrides``.

    ``traces`` binds in-memory Trace objects (repeated when ``repeat``).
    """
    d = normalize(user or {})
    for k, v in (overrides or {}).items():
        apply_override(d, k, v)
    bound = None if traces is None else [(t, repeat) for t in traces]
    return build(d, traces=bound)


def load_config(path: str, overrides=(), seed: Optional[int] = None) -> SimConfig:
    try:
        with open(path) as f:
            user = json.load(f)
    except OSError as e:
        raise ConfigError([("--config", f"cannot read {path}: {e.strerror}")])
    except json.JSONDecodeError as e:
        raise ConfigError([("--config", f"invalid JSON: {e}")])
    if not isinstance(user, dict):
        raise ConfigError([("--config", "top level must be an object")])
    d = normalize(user)
    for o in overrides:
        k, v = parse_override(o) if isinstance(o, str) else o
        apply_override(d, k, v)
    if seed is not None:
        d["seed"] = seed
    return build(d, os.path.dirname(os.path.abspath(path)))


def config_hash(raw: Dict[str, Any], traces: List[Trace]) -> str:
    h = hashlib.sha256()
    body = {k: v for k, v in raw.items() if k != "apps"}
    h.update(json.dumps(body, sort_keys=True).encode())
    for t in traces:
        h.update(t.digest().encode())
    return h.hexdigest()[:16]
