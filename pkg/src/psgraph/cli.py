"""Command-line front end: spectrum, verify and analyze."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict

from .errors import CoverError, GraphError, NumericalError
from .harness import SUITES, ConfigError, RunConfig, run_analyze, run_spectrum, run_verify, write_json

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="psgraph", description=__doc__)
    p.add_argument("command", choices=["spectrum", "verify", "analyze"])
    p.add_argument("--graph", help="named graph, edge-list/JSON path, or random:v,d,seed")
    p.add_argument("--suite", action="append",
                   help=f"suite name or comma list; 'all' for {', '.join(SUITES)}")
    p.add_argument("--depth", type=int, help="maximal random symbol depth (0..3)")
    p.add_argument("--n", type=int, help="largest relation index n (0..3)")
    p.add_argument("--symbols", type=int, help="random symbols per work item")
    p.add_argument("--tol", type=float, help="relative tolerance for identities")
    p.add_argument("--eigen-tol", type=float, dest="eigen_tol")
    p.add_argument("--zero-tol", type=float, dest="zero_tol")
    p.add_argument("--group-tol", type=float, dest="group_tol")
    p.add_argument("--branch", choices=["principal", "both"])
    p.add_argument("--pairs", choices=["all", "diagonal"])
    p.add_argument("--radius", type=int, help="cover radius override")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--out", help="report path (spectrum/verify) or output directory (analyze)")
    p.add_argument("--exclude", type=float, action="append",
                   help="eigenvalue to leave out (repeatable)")
    p.add_argument("--config", help="JSON file mirroring RunConfig")
    p.add_argument("--inject-fault", action="store_true", dest="inject_fault",
                   help=argparse.SUPPRESS)
    return p


def config_from_args(args) -> RunConfig:
    data = {}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    cfg = RunConfig.from_dict(data)
    for name in ("graph", "depth", "n", "symbols", "tol", "eigen_tol", "zero_tol", "group_tol",
                 "branch", "pairs", "radius", "seed", "jobs", "out", "exclude"):
        val = getattr(args, name)
        if val is not None:
            setattr(cfg, name, val)
    if args.suite:
        names = [s.strip() for item in args.suite for s in item.split(",") if s.strip()]
        cfg.suites = list(SUITES) if "all" in names else names
    if args.inject_fault:
        cfg.inject_fault = True
    return cfg.validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        if args.command == "spectrum":
            text = write_json(run_spectrum(cfg), cfg.out)
            if not cfg.out:
                print(text)
            return EXIT_OK
        if args.command == "analyze":
            paths = run_analyze(cfg)
            print(json.dumps(paths))
            return EXIT_OK
        report = run_verify(cfg)
        text = write_json(report.to_json(), cfg.out)
        if not cfg.out:
            print(text)
        summ = report.summary()
        print(f"{summ['passed']}/{summ['total']} records pass", file=sys.stderr)
        for w in report.warnings:
            print(f"warning: {w}", file=sys.stderr)
        return EXIT_OK if report.all_pass else EXIT_FAIL
    except (ConfigError, GraphError, CoverError, OSError, json.JSONDecodeError) as exc:
        print(f"psgraph: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"psgraph: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except Exception as exc:  # noqa: BLE001
        print(f"psgraph: internal failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
