"""Command line entry point: ``lvselect direct-fit | select | report``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ConfigError
from .experiment import config_from_dict, load_manifests, report_markdown, run_experiment, write_report


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lvselect", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("direct-fit", "fit the plain competition model"),
                        ("select", "run step-by-step mechanism elimination")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", type=Path, help="flat JSON config file")
        p.add_argument("--scenario", choices=("full", "late"))
        p.add_argument("--seed", type=int, action="append", dest="seeds",
                       help="seed to run (repeatable)")
        p.add_argument("--epsilon", type=int)
        p.add_argument("--epochs", type=int)
        p.add_argument("--out", dest="out_dir")
        p.add_argument("--protect-structural", action="store_true", default=None)
    p = sub.add_parser("report", help="summarise finished runs")
    p.add_argument("--out", dest="out_dir", default="runs")
    p.add_argument("runs", nargs="*", type=Path, help="run directories (default: all under --out)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "report":
        manifests = load_manifests(args.runs or [args.out_dir])
        if not manifests:
            print(f"no manifests found under {args.runs or args.out_dir}", file=sys.stderr)
            return 1
        report = write_report(args.out_dir, manifests)
        print(report_markdown(report), end="")
        return 0

    doc = {}
    if args.config is not None:
        try:
            doc = json.loads(args.config.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            print(f"config error: cannot read {args.config}: {exc}", file=sys.stderr)
            return 2
        if not isinstance(doc, dict):
            print("config error: config must be a JSON object", file=sys.stderr)
            return 2
    overrides = {
        "scenario": args.scenario,
        "seeds": args.seeds,
        "epsilon": args.epsilon,
        "epochs": args.epochs,
        "out_dir": args.out_dir,
        "protect_structural": args.protect_structural,
    }
    doc.update({k: v for k, v in overrides.items() if v is not None})
    if args.scenario is not None:
        doc.pop("window", None)
    if "scenario" not in doc and "window" not in doc:
        doc["scenario"] = "full"
    try:
        cfg = config_from_dict(doc)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    results = run_experiment(cfg, args.command)
    for r in results:
        print(f"{r.status:6s} {r.directory}" + (f"  ({r.error})" if r.error else ""))
    return 1 if all(r.status != "ok" for r in results) else 0


if __name__ == "__main__":
    sys.exit(main())
