"""Command-line entry point ``jang-penrose``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import pipeline


def _print(obj):
    sys.stdout.write(pipeline.dumps(obj))


def _summary(report):
    res = report.get("results", {})
    out = {"name": report.get("name"), "exit_code": report.get("exit_code"),
           "stages": {k: v["status"] for k, v in report.get("stages", {}).items()},
           "warnings": report.get("warnings", [])}
    if "penrose" in res:
        p = res["penrose"]
        out["penrose"] = {k: p[k] for k in ("m_adm", "area", "margin", "uncertainty",
                                             "verdict")}
    if "error" in report:
        out["error"] = report["error"]
    return out


def cmd_run(args):
    try:
        cfg = pipeline.load_config(args.config)
    except pipeline.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return pipeline.EXIT_CONFIG
    code, report = pipeline.run(cfg, args.out)
    _print(_summary(report))
    if "error" in report:
        print(f"error: {report['error']['message']}", file=sys.stderr)
    return code


def cmd_batch(args):
    path = Path(args.configs)
    try:
        configs = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot load {path}: {exc}", file=sys.stderr)
        return pipeline.EXIT_CONFIG
    if isinstance(configs, dict):
        configs = configs.get("runs", configs.get("configs"))
    if not isinstance(configs, list):
        print("error: batch file must hold a list of run configs", file=sys.stderr)
        return pipeline.EXIT_CONFIG
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return pipeline.EXIT_CONFIG
    code, agg = pipeline.batch(configs, args.workers, args.out, path.parent)
    _print({"verdict": agg["verdict"], "exit_code": code, "count": agg["count"],
            "runs": [{k: r[k] for k in ("index", "name", "exit_code", "penrose_verdict")}
                     for r in agg["runs"]]})
    return code


def cmd_validate(args):
    path = Path(args.data)
    try:
        desc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot load {path}: {exc}", file=sys.stderr)
        return pipeline.EXIT_CONFIG
    if isinstance(desc, dict) and isinstance(desc.get("data"), dict):
        desc = desc["data"]
    code, report = pipeline.validate(desc)
    _print(report)
    return code


def build_parser():
    p = argparse.ArgumentParser(
        prog="jang-penrose",
        description="Generalized Jang equation solver and Penrose inequality verifier "
                    "for spherically symmetric initial data.",
        epilog=f"Exit codes: 0 pass, 1 check failure, 2 config/data error, "
               f"3 solver non-convergence. Default output directory: ${pipeline.OUT_ENV} "
               f"or ./{pipeline.DEFAULT_OUT}.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one configuration end to end")
    r.add_argument("--config", required=True, help="run configuration JSON")
    r.add_argument("--out", help="output directory")
    r.set_defaults(func=cmd_run)
    b = sub.add_parser("batch", help="run a list of configurations")
    b.add_argument("--configs", required=True, help="JSON list of configs or config paths")
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--out", help="output directory")
    b.set_defaults(func=cmd_batch)
    v = sub.add_parser("validate", help="check a data descriptor")
    v.add_argument("--data", required=True, help="data descriptor JSON")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
