"""Command-line front end: ``qpcocycle <subcommand> [flags]``."""

from __future__ import annotations

import argparse
import json
import sys

from pydantic import ValidationError

from .experiments import OUT_ENV, load_config, run_experiment
from .multiscale import BudgetExceeded

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET = 0, 2, 3

SUBCOMMANDS = {
    "estimate": "estimate",
    "scan-energy": "energy_scan",
    "scan-omega": "omega_continuity",
    "deviation": "deviation_decay",
    "avalanche": "avalanche_fuzz",
    "schedule": "schedule_trace",
    "amo-spectrum": "amo_spectrum",
    "corollary2": "corollary2",
    "uniform-bound": "uniform_bound",
}


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _ints(s):
    return [int(t) for t in s.split(",") if t]


def _floats(s):
    return [float(t) for t in s.split(",") if t]


def _common(p):
    p.add_argument("--config", help="JSON config file; flags override its fields")
    p.add_argument("--omega")
    p.add_argument("--lambda", dest="lambda_", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--energy", type=float)
    p.add_argument("--scale-n", type=int)
    p.add_argument("--grid-m", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV}/<kind> or runs/<kind>)")
    p.add_argument("--threads", type=int)
    p.add_argument("--plots", action="store_const", const=True)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qpcocycle", description="Lyapunov exponents of quasi-periodic Schrodinger cocycles")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    specific = {
        "scan-energy": [("--e-min", float), ("--e-max", float), ("--e-step", float), ("--q-probe", int), ("--rational", str)],
        "scan-omega": [("--rational", str), ("--delta", float), ("--n-offsets", int)],
        "deviation": [("--q-values", _ints), ("--scale-c", float)],
        "avalanche": [("--trials", int), ("--n", int), ("--mu-floors", _floats), ("--avalanche-c", float),
                      ("--factored-trials", int)],
        "schedule": [("--q0", int), ("--n0", int), ("--level-budget", int), ("--max-q", int), ("--max-steps", int),
                     ("--schedule-scale-c", float)],
        "amo-spectrum": [("--q-probe", int), ("--rational", str), ("--x-samples", int), ("--e-resolution", float)],
        "corollary2": [("--q-probe", int), ("--n-energies", int), ("--reference-scale", int)],
        "uniform-bound": [("--q-probe", int), ("--n-energies", int), ("--scales", _ints)],
    }
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        _common(p)
        for flag, typ in specific.get(name, []):
            p.add_argument(flag, type=typ)
        if name == "schedule":
            p.add_argument("--verify", action="store_const", const=True)
    return parser


def _overrides(ns: argparse.Namespace) -> dict:
    skip = {"command", "config", "lambda_"}
    out = {k: v for k, v in vars(ns).items() if k not in skip and v is not None}
    if ns.lambda_ is not None:
        out["lambda"] = ns.lambda_
    out["kind"] = SUBCOMMANDS[ns.command]
    return out


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        cfg = load_config(ns.config, _overrides(ns))
    except (ConfigError, ValidationError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = run_experiment(cfg)
    except BudgetExceeded as exc:
        print(f"compute budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps({"out": str(result.out_dir), "files": [f.name for f in result.files]}))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
