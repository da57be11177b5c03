"""Experiment configs, deterministic execution, sweeps and CSV/JSON output.

A config is a nested mapping (YAML or JSON) with the sections ``learner``,
``adversary``, ``set``, ``mode``, ``bounds`` and ``output``; see
:data:`DEFAULTS` for every key. ``--set path=value`` overrides are applied to
the mapping before validation, so error messages name the dotted field path.
"""
from __future__ import annotations

import copy
import csv
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import yaml

from .algorithms import DeltaSchedule, Mode, Schedule, make_learner, run
from .errors import ConfigError
from .geometry import make_regularizer, make_set
from .losses import SUITES, AdversarySequence, CompositePart
from .metrics import BOUND_NAMES, BoundVerdict, check_bound, default_bounds, diagnose, slope_fit

DEFAULTS = {
    "learner": {
        "kind": "ftl",
        "regularizer": "l2",
        "eta": None,          # null (theorem default), a number, or {kind, c}
        "beta": "sqrt_t",     # RDA only: sqrt_t or zero
        "regime": "general",  # IOL / COMiD: general or strong
        "batch": None,        # null, or {B: int or null}
    },
    "adversary": {
        "suite": "quadratic",
        "seed": 0,
        "seeds": None,        # list of seeds; overrides seed in sweeps
        "T": 16,
        "horizons": None,     # list of T, or {dyadic: [lo, hi]} for 2**lo .. 2**hi
        "d": 2,
        "alpha": 1.0,
        "scale": 1.0,
        "composite": {"kind": "none", "weight": 0.0},
    },
    "set": {"kind": "box"},
    "mode": {"kind": "exact", "delta": None, "oracle": "lagged"},
    "bounds": "default",
    "slope": None,            # null, or {exponent: float, tol: float}
    "strict": False,
    "validate": True,
    "output": {"path": None, "format": "csv"},
}

CSV_COLUMNS = ("config_hash", "learner", "mode", "T", "d", "seed", "regret", "forward_regret",
               "stability", "bound_name", "bound_theoretical", "bound_empirical", "slack", "pass")

_FLOAT_COLUMNS = ("regret", "forward_regret", "stability", "bound_theoretical",
                  "bound_empirical", "slack")


# -- config -------------------------------------------------------------------

def _merge(base, extra, path=""):
    out = copy.deepcopy(base)
    for k, v in (extra or {}).items():
        if k not in base:
            raise ConfigError(f"{path}{k}: unknown field")
        if isinstance(base[k], dict) and isinstance(v, dict) and k != "set":
            out[k] = _merge(base[k], v, f"{path}{k}.")
        else:
            out[k] = copy.deepcopy(v)
    return out


def apply_override(tree: dict, assignment: str) -> dict:
    """Apply one ``path=value`` override; ``value`` is parsed as YAML."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not of the form path=value")
    path, raw = assignment.split("=", 1)
    keys = path.strip().split(".")
    value = yaml.safe_load(raw)
    node = tree
    for k in keys[:-1]:
        if not isinstance(node.get(k), dict):
            node[k] = {}
        node = node[k]
    node[keys[-1]] = value
    return tree


def load_config(path: str | None = None, overrides=(), seed: int | None = None) -> "ExperimentConfig":
    """Read a YAML/JSON config file, apply overrides and validate."""
    tree = {}
    if path:
        with open(path, encoding="utf-8") as fh:
            tree = yaml.safe_load(fh) or {}
        if not isinstance(tree, dict):
            raise ConfigError("config file must hold a mapping at the top level")
    for ov in overrides:
        apply_override(tree, ov)
    if seed is not None:
        tree.setdefault("adversary", {})["seed"] = seed
        tree["adversary"].pop("seeds", None)
    return ExperimentConfig.from_dict(tree)


def _need(cond, path, msg):
    if not cond:
        raise ConfigError(f"{path}: {msg}")


def _int(v, path, lo=None):
    _need(isinstance(v, (int, np.integer)) and not isinstance(v, bool), path, f"expected an integer, got {v!r}")
    if lo is not None:
        _need(v >= lo, path, f"must be >= {lo}, got {v}")
    return int(v)


def _num(v, path, positive=False):
    _need(isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v), path,
          f"expected a finite number, got {v!r}")
    if positive:
        _need(v > 0, path, f"must be positive, got {v}")
    return float(v)


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated, fully explicit experiment description."""

    tree: dict

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        tree = _merge(DEFAULTS, raw)
        cls._validate(tree)
        return cls(tree)

    @staticmethod
    def _validate(t):
        lr = t["learner"]
        _need(lr["kind"] in ("ftl", "ftrl", "rda", "iol", "comid", "md"), "learner.kind",
              f"unknown learner {lr['kind']!r}")
        try:
            make_regularizer(lr["regularizer"])
        except ConfigError as exc:
            raise ConfigError(f"learner.regularizer: {exc}") from None
        if lr["eta"] is not None:
            if isinstance(lr["eta"], dict):
                _need(set(lr["eta"]) <= {"kind", "c"}, "learner.eta", "expected keys kind and c")
                try:
                    Schedule(lr["eta"].get("kind", "constant"), _num(lr["eta"].get("c", 1.0), "learner.eta.c"))
                except ConfigError as exc:
                    raise ConfigError(f"learner.eta: {exc}") from None
            else:
                _num(lr["eta"], "learner.eta", positive=True)
        _need(lr["beta"] in ("sqrt_t", "zero"), "learner.beta", f"expected sqrt_t or zero, got {lr['beta']!r}")
        _need(lr["regime"] in ("general", "strong"), "learner.regime",
              f"expected general or strong, got {lr['regime']!r}")
        if lr["batch"] is not None:
            _need(isinstance(lr["batch"], dict), "learner.batch", "expected a mapping such as {B: 8}")
            B = lr["batch"].get("B")
            if B is not None:
                _int(B, "learner.batch.B", 1)
        ad = t["adversary"]
        _need(ad["suite"] in SUITES, "adversary.suite", f"unknown suite {ad['suite']!r}")
        _int(ad["seed"], "adversary.seed", 0)
        if ad["seeds"] is not None:
            _need(isinstance(ad["seeds"], list) and ad["seeds"], "adversary.seeds", "expected a nonempty list")
            for i, s in enumerate(ad["seeds"]):
                _int(s, f"adversary.seeds[{i}]", 0)
        _int(ad["T"], "adversary.T", 0)
        hz = ad["horizons"]
        if hz is not None:
            if isinstance(hz, dict):
                _need(set(hz) == {"dyadic"}, "adversary.horizons", "expected {dyadic: [lo, hi]}")
                lohi = hz["dyadic"]
                _need(isinstance(lohi, list) and len(lohi) == 2, "adversary.horizons.dyadic",
                      "expected [lo, hi]")
                lo, hi = (_int(x, "adversary.horizons.dyadic", 0) for x in lohi)
                _need(lo <= hi <= 20, "adversary.horizons.dyadic", "expected lo <= hi <= 20")
            else:
                _need(isinstance(hz, list) and hz, "adversary.horizons", "expected a list or {dyadic: [lo, hi]}")
                for i, T in enumerate(hz):
                    _int(T, f"adversary.horizons[{i}]", 0)
        _int(ad["d"], "adversary.d", 1)
        _num(ad["alpha"], "adversary.alpha", positive=True)
        _num(ad["scale"], "adversary.scale", positive=True)
        comp = ad["composite"]
        _need(isinstance(comp, dict), "adversary.composite", "expected {kind, weight}")
        try:
            CompositePart(comp.get("kind", "none"), _num(comp.get("weight", 0.0), "adversary.composite.weight"))
        except ConfigError as exc:
            raise ConfigError(f"adversary.composite: {exc}") from None
        _need(isinstance(t["set"], dict), "set", "expected a mapping with a kind")
        try:
            make_set(t["set"], ad["d"])
        except (ConfigError, ValueError) as exc:
            raise ConfigError(f"set: {exc}") from None
        md = t["mode"]
        _need(md["kind"] in ("exact", "approx"), "mode.kind", f"expected exact or approx, got {md['kind']!r}")
        if md["kind"] == "approx":
            _need(isinstance(md["delta"], dict), "mode.delta", "approximate mode needs {kind, c}")
            try:
                DeltaSchedule(md["delta"].get("kind", "inverse_t"), _num(md["delta"].get("c", 1.0), "mode.delta.c"))
            except ConfigError as exc:
                raise ConfigError(f"mode.delta: {exc}") from None
        _need(md["oracle"] in ("lagged", "solver"), "mode.oracle", f"unknown oracle {md['oracle']!r}")
        b = t["bounds"]
        if b != "default":
            _need(isinstance(b, list), "bounds", "expected 'default' or a list of bound names")
            for i, name in enumerate(b):
                _need(name in BOUND_NAMES, f"bounds[{i}]", f"unknown bound {name!r}")
        if t["slope"] is not None:
            _need(isinstance(t["slope"], dict), "slope", "expected {exponent, tol}")
            _num(t["slope"].get("exponent", 0.5), "slope.exponent")
            _num(t["slope"].get("tol", 0.1), "slope.tol")
        _need(isinstance(t["strict"], bool), "strict", "expected true or false")
        _need(isinstance(t["validate"], bool), "validate", "expected true or false")
        _need(t["output"]["format"] in ("csv", "json"), "output.format", "expected csv or json")

    # -- derived views ----------------------------------------------------
    def to_dict(self) -> dict:
        return copy.deepcopy(self.tree)

    def dumps(self) -> str:
        return yaml.safe_dump(self.tree, sort_keys=True)

    @property
    def hash(self) -> str:
        """First 16 hex digits of SHA-256 over the canonical JSON (output paths excluded)."""
        t = {k: v for k, v in self.tree.items() if k != "output"}
        blob = json.dumps(t, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @property
    def horizons(self) -> list:
        hz = self.tree["adversary"]["horizons"]
        if hz is None:
            return [self.tree["adversary"]["T"]]
        if isinstance(hz, dict):
            lo, hi = hz["dyadic"]
            return [2 ** k for k in range(lo, hi + 1)]
        return list(hz)

    @property
    def seeds(self) -> list:
        ad = self.tree["adversary"]
        return list(ad["seeds"]) if ad["seeds"] is not None else [ad["seed"]]

    def mode(self) -> Mode:
        md = self.tree["mode"]
        if md["kind"] == "exact":
            return Mode()
        dl = md["delta"]
        return Mode("approx", DeltaSchedule(dl.get("kind", "inverse_t"), float(dl.get("c", 1.0))), md["oracle"])

    def learner(self):
        lr = self.tree["learner"]
        batch = lr["batch"]
        return make_learner(lr["kind"], lr["regularizer"], lr["eta"], lr["beta"], lr["regime"],
                            B=None if batch is None else batch.get("B"), batch=batch is not None)

    def sequence(self, T: int, seed: int) -> AdversarySequence:
        ad = self.tree["adversary"]
        d = ad["d"]
        comp = CompositePart(ad["composite"].get("kind", "none"), float(ad["composite"].get("weight", 0.0)))
        return AdversarySequence(ad["suite"], T, make_set(self.tree["set"], d), seed,
                                 float(ad["alpha"]), float(ad["scale"]), comp)

    def with_updates(self, **sections) -> "ExperimentConfig":
        tree = self.to_dict()
        for k, v in sections.items():
            tree[k] = _merge(tree[k], v, f"{k}.") if isinstance(tree.get(k), dict) and isinstance(v, dict) else v
        return ExperimentConfig.from_dict(tree)


# -- results ------------------------------------------------------------------

@dataclass
class ResultRow:
    """One (config, T, seed) outcome with its bound verdicts.

    ``wall_clock`` is measured but kept out of emitted files so that output
    is byte-reproducible.
    """

    config_hash: str
    learner: str
    mode: str
    T: int
    d: int
    seed: int | None
    regret: float | None
    forward_regret: float | None
    stability: float | None
    verdicts: list = field(default_factory=list)
    wall_clock: float = 0.0

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def records(self) -> list:
        """Flat records, one per verdict (one with empty bound fields if none)."""
        base = {"config_hash": self.config_hash, "learner": self.learner, "mode": self.mode,
                "T": self.T, "d": self.d, "seed": self.seed, "regret": self.regret,
                "forward_regret": self.forward_regret, "stability": self.stability}
        if not self.verdicts:
            return [dict(base, bound_name=None, bound_theoretical=None, bound_empirical=None,
                         slack=None, **{"pass": None})]
        return [dict(base, bound_name=v.bound_name, bound_theoretical=v.theoretical_value,
                     bound_empirical=v.empirical_value, slack=v.slack_applied, **{"pass": v.passed})
                for v in self.verdicts]


def _run_one(args):
    tree, T, seed = args
    cfg = ExperimentConfig(tree)
    t0 = time.perf_counter()
    learner = cfg.learner()
    traj = run(learner, cfg.sequence(T, seed), cfg.mode(), validate=tree["validate"], strict=tree["strict"])
    names = default_bounds(traj) if tree["bounds"] == "default" else tree["bounds"]
    if T == 0:
        report, verdicts = diagnose(traj), []
    else:
        report = diagnose(traj)
        verdicts = [check_bound(traj, n, report) for n in names]
    return ResultRow(cfg.hash, learner.name, cfg.mode().label, T, cfg.tree["adversary"]["d"], seed,
                     report.regret, report.forward_regret, report.stability, verdicts,
                     time.perf_counter() - t0)


def worker_count(n_tasks: int) -> int:
    cap = os.environ.get("REGRETLAB_THREADS")
    n = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(n, n_tasks))


def _map(tasks):
    n = worker_count(len(tasks))
    if n == 1:
        return [_run_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(_run_one, tasks))  # map preserves task order


def run_experiment(cfg: ExperimentConfig) -> list:
    """Rows for every (horizon, seed) of ``cfg``, in config order.

    With more than one horizon a slope-fit row is appended: the mean regret
    over seeds is regressed on ``T`` in log-log scale and compared with the
    stated exponent plus tolerance.
    """
    tasks = [(cfg.tree, T, s) for T in cfg.horizons for s in cfg.seeds]
    rows = _map(tasks)
    if len(cfg.horizons) > 1:
        rows.append(slope_row(cfg, rows))
    return rows


def stated_exponent(cfg: ExperimentConfig) -> float:
    sl = cfg.tree["slope"]
    if sl is not None and "exponent" in sl:
        return float(sl["exponent"])
    md = cfg.tree["mode"]
    if cfg.tree["learner"]["kind"] == "iol" and md["kind"] == "approx" and md["delta"].get("kind") == "inverse_t":
        return 0.75
    return 0.5


def slope_row(cfg: ExperimentConfig, rows) -> ResultRow:
    hs = [T for T in cfg.horizons if T > 0]
    means = [float(np.mean([r.regret for r in rows if r.T == T and r.seed is not None])) for T in hs]
    tol = float((cfg.tree["slope"] or {}).get("tol", 0.1))
    k = stated_exponent(cfg)
    slope = slope_fit(hs, means) if min(means) > 0 else math.inf
    v = BoundVerdict(f"slope_regret_T^{k:g}", k + tol, slope)
    return ResultRow(cfg.hash, rows[0].learner, rows[0].mode, max(hs), cfg.tree["adversary"]["d"], None,
                     None, None, None, [v])


def sweep(configs) -> list:
    """Run several configs through one worker pool; results keep config order."""
    tasks, spans = [], []
    for cfg in configs:
        start = len(tasks)
        tasks += [(cfg.tree, T, s) for T in cfg.horizons for s in cfg.seeds]
        spans.append((cfg, start, len(tasks)))
    flat = _map(tasks)
    rows = []
    for cfg, a, b in spans:
        part = flat[a:b]
        rows += part
        if len(cfg.horizons) > 1:
            rows.append(slope_row(cfg, part))
    return rows


# -- output -------------------------------------------------------------------

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if not math.isfinite(v) else format(v, ".17g")
    return str(v)


def to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        for rec in r.records():
            w.writerow([_fmt(rec[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def to_json(rows) -> str:
    recs = []
    for r in rows:
        for rec in r.records():
            recs.append({c: (float(format(rec[c], ".17g")) if isinstance(rec[c], float) and math.isfinite(rec[c])
                             else rec[c]) for c in CSV_COLUMNS})
    return json.dumps(recs, indent=1, allow_nan=True) + "\n"


def emit(rows, fmt: str = "csv", path: str | None = None) -> str:
    """Render rows as CSV or JSON; write to ``path`` when given. Returns the text."""
    if fmt not in ("csv", "json"):
        raise ConfigError(f"output.format: expected csv or json, got {fmt!r}")
    text = to_csv(rows) if fmt == "csv" else to_json(rows)
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def read_json(text: str) -> list:
    return json.loads(text)


def read_csv(text: str) -> list:
    """Parse emitted CSV back into typed records."""
    out = []
    for rec in csv.DictReader(io.StringIO(text)):
        typed = {}
        for c in CSV_COLUMNS:
            v = rec[c]
            if v == "":
                typed[c] = None
            elif c in _FLOAT_COLUMNS:
                typed[c] = float(v)
            elif c in ("T", "d", "seed"):
                typed[c] = int(v)
            elif c == "pass":
                typed[c] = v == "true"
            else:
                typed[c] = v
        out.append(typed)
    return out
