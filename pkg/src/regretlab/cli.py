"""Command-line entry point: ``regretlab run | sweep | acceptance``."""
from __future__ import annotations

import argparse
import sys

from .errors import RegretLabError, SolverError
from .harness import emit, load_config, run_experiment, sweep


def _common(p):
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="PATH=VALUE",
                   help="override a config field, e.g. --set adversary.T=64 (repeatable)")
    p.add_argument("--seed", type=int, default=None, help="adversary seed (replaces seed and seeds)")
    p.add_argument("--strict", action="store_true", help="abort when an update misses its accuracy target")
    p.add_argument("--no-validate", action="store_true", help="skip the regime checks on schedules")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=None, help="output format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="regretlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run one experiment config")
    p.add_argument("config", nargs="?", help="YAML or JSON config file")
    _common(p)
    p = sub.add_parser("sweep", help="run several configs (dyadic horizons by default)")
    p.add_argument("configs", nargs="+", help="YAML or JSON config files")
    p.add_argument("--dyadic", default="6,12", metavar="LO,HI",
                   help="horizons 2**LO .. 2**HI for configs without explicit horizons")
    _common(p)
    p = sub.add_parser("acceptance", help="run acceptance criteria")
    p.add_argument("suite", nargs="?", default="all",
                   choices=("all", "bounds-exact", "bounds-approx", "equivalence", "wrapper", "oracles"))
    return parser


def _configure(path, args, extra=()):
    ov = list(args.overrides) + list(extra)
    if args.strict:
        ov.append("strict=true")
    if args.no_validate:
        ov.append("validate=false")
    if args.out is not None:
        ov.append(f"output.path={args.out}")
    if args.format is not None:
        ov.append(f"output.format={args.format}")
    return load_config(path, ov, args.seed)


def _write(rows, cfg, args):
    out = cfg.tree["output"]
    text = emit(rows, out["format"], out["path"])
    if not out["path"]:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "acceptance":
            from .acceptance import run_suite

            results = run_suite(args.suite)
            failing = [r.number for r in results if not r.passed]
            if failing:
                print("failing criteria: " + ", ".join(map(str, failing)), file=sys.stderr)
                return 1
            return 0
        if args.command == "run":
            cfg = _configure(args.config, args)
            rows = run_experiment(cfg)
        else:
            lo, hi = (int(x) for x in args.dyadic.split(","))
            cfgs = []
            for path in args.configs:
                cfg = _configure(path, args)
                if cfg.tree["adversary"]["horizons"] is None:
                    cfg = _configure(path, args, [f"adversary.horizons={{dyadic: [{lo}, {hi}]}}"])
                cfgs.append(cfg)
            rows = sweep(cfgs)
            cfg = cfgs[0]
        _write(rows, cfg, args)
    except SolverError as exc:
        print(f"solver error at round {exc.step}: {exc}", file=sys.stderr)
        return 3
    except RegretLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    failed = [r for r in rows if not r.passed]
    for r in failed:
        for v in r.verdicts:
            if not v.passed:
                print(f"T={r.T} seed={r.seed}: {v.line()}", file=sys.stderr)
    return 1 if failed else 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
