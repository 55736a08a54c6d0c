"""Command line front end for the experiment harness.

Subcommands app1 through app4 run one application, sweep repeats a run
over values of a single parameter, and selftest executes the built-in
checks.  Exit status is 0 on success, 1 for configuration errors, and 2
when any trial or check fails at runtime.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

from . import harness

_EXPERIMENT_KEYS = {"app", "params", "trials", "base_seed", "parallelism",
                    "output_path"}


def _add_run_options(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", metavar="PATH",
                     help="JSON experiment document or bare parameter block")
    sub.add_argument("--trials", type=int, metavar="T")
    sub.add_argument("--seed", type=int, metavar="S")
    sub.add_argument("--parallel", type=int, metavar="P")
    sub.add_argument("--out", metavar="PATH")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="manifold-ris",
        description="Run the reflecting-surface simulation experiments.")
    subs = parser.add_subparsers(dest="command", required=True)
    for app in ("app1", "app2", "app3", "app4"):
        sub = subs.add_parser(app, help=f"run the {app} experiment")
        _add_run_options(sub)
    sweep = subs.add_parser("sweep", help="repeat a run over one parameter")
    _add_run_options(sweep)
    sweep.add_argument("--param", required=True, metavar="NAME")
    sweep.add_argument("--values", required=True, metavar="V1,V2,...")
    selftest = subs.add_parser("selftest", help="run the built-in checks")
    selftest.add_argument("--out", metavar="PATH")
    return parser


def _load_document(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except OSError as exc:
        raise harness.ConfigError(f"cannot read config {path!r}: {exc}")
    except json.JSONDecodeError as exc:
        raise harness.ConfigError(f"config {path!r} is not valid JSON: {exc}")
    if not isinstance(doc, dict):
        raise harness.ConfigError(
            f"config {path!r} must hold a JSON object")
    if _EXPERIMENT_KEYS & set(doc):
        unknown = set(doc) - _EXPERIMENT_KEYS
        if unknown:
            raise harness.ConfigError(
                f"unknown config field {sorted(unknown)[0]!r}")
        return doc
    return {"params": doc}


def _build_config(args, app: Optional[str]) -> harness.ExperimentConfig:
    doc = _load_document(args.config)
    if app is not None:
        if doc.get("app", app) != app:
            raise harness.ConfigError(
                f"config names app {doc['app']!r} but the command is {app}")
        doc["app"] = app
    elif "app" not in doc:
        raise harness.ConfigError("sweep config must name the app")
    if args.trials is not None:
        doc["trials"] = args.trials
    if args.seed is not None:
        doc["base_seed"] = args.seed
    if args.parallel is not None:
        doc["parallelism"] = args.parallel
    if args.out is not None:
        doc["output_path"] = args.out
    try:
        return harness.ExperimentConfig(**doc)
    except TypeError as exc:
        raise harness.ConfigError(str(exc))


def _parse_values(text: str) -> List:
    values = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            raise harness.ConfigError("empty entry in --values")
        try:
            values.append(json.loads(chunk))
        except json.JSONDecodeError:
            values.append(chunk)
    return values


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "selftest":
            cfg = harness.ExperimentConfig(
                app="selftest", output_path=args.out)
            result = harness.run_experiment(cfg)
        elif args.command == "sweep":
            cfg = _build_config(args, app=None)
            result = harness.run_sweep(cfg, args.param,
                                       _parse_values(args.values))
        else:
            cfg = _build_config(args, app=args.command)
            result = harness.run_experiment(cfg)
    except harness.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    if not result.ok:
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
