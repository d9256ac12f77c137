"""Command-line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 selftest failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from . import __version__
from ._accel import BACKEND
from .bench import emit_csv, sweep_agents, sweep_nodes
from .config import SimConfig, load_config
from .crypto import DIGEST_NAME
from .errors import ConfigError, WsnAggError
from .protocol import run_simulation
from .selftest import run_selftest

DEFAULT_NODE_COUNTS = (10, 20, 30, 40, 50)
DEFAULT_AGENT_COUNTS = (1, 2, 3, 4, 5)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _counts(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty count list")
    return values


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key = value config file")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", metavar="PATH", default="-", help="output file, '-' for stdout (default)")
    common.add_argument("--trials", type=int, help="timing trials per sweep point")

    parser = _Parser(prog="wsnagg", description="Secure WSN data-aggregation simulator and benchmark.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("run", parents=[common], help="run one simulation, print JSON-lines round results")
    p = sub.add_parser("sweep-nodes", parents=[common], help="vary the sensor count, write CSV")
    p.add_argument("--counts", type=_counts, default=list(DEFAULT_NODE_COUNTS))
    p = sub.add_parser("sweep-agents", parents=[common], help="vary the cluster-agent count, write CSV")
    p.add_argument("--counts", type=_counts, default=list(DEFAULT_AGENT_COUNTS))
    sub.add_parser("selftest", parents=[common], help="run the invariant suite on the tiny curve")
    return parser


def _load(args) -> SimConfig:
    cfg = load_config(args.config) if args.config else SimConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.trials is not None:
        changes["trials"] = args.trials
    return cfg.replace(**changes) if changes else cfg


def _open_out(path):
    if path == "-":
        return sys.stdout
    return open(path, "w")


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    if args.command == "selftest":
        results = run_selftest()
        for name, ok, detail in results:
            print(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else ""))
        return 0 if all(ok for _, ok, _ in results) else 2

    try:
        cfg = _load(args)
    except (ConfigError, WsnAggError) as exc:
        print(f"wsnagg: config error: {exc}", file=sys.stderr)
        return 1

    try:
        if args.command == "run":
            results = run_simulation(cfg)
            fh = _open_out(args.out)
            try:
                header = {"curve": cfg.curve_params.to_record(), "digest": DIGEST_NAME, "seed": cfg.seed}
                fh.write(json.dumps({"config": header}, sort_keys=True, separators=(",", ":")) + "\n")
                for r in results:
                    fh.write(r.to_json() + "\n")
            finally:
                if fh is not sys.stdout:
                    fh.close()
            return 0
        if args.command == "sweep-nodes":
            records = sweep_nodes(cfg, args.counts)
        else:
            records = sweep_agents(cfg, args.counts)
        emit_csv(records, args.out)
        for r in records:
            if r.error:
                print(f"wsnagg: {r.sweep_var}={r.sweep_value} skipped: {r.error}", file=sys.stderr)
    except ConfigError as exc:
        print(f"wsnagg: config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"wsnagg: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
