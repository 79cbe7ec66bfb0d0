"""Command-line entry point: ``netdecide <kind> --scenario FILE --out DIR``."""

from __future__ import annotations

import argparse
import json
import sys

from .scenario import KINDS, NumericalFailure, SchemaError, bundled_names, load_scenario, run_scenario, sweep

EXIT_SCHEMA = 2
EXIT_NUMERIC = 3


def _parse_values(text: str) -> list:
    """``1,3`` or ``0.5:3:0.1`` (inclusive range)."""
    if ":" in text:
        a, b, h = (float(v) for v in text.split(":"))
        n = int((b - a) / h + 1e-9)
        return [round(a + i * h, 12) for i in range(n + 1)]
    out = []
    for tok in text.split(","):
        v = float(tok)
        out.append(int(v) if v.is_integer() and "." not in tok else v)
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="netdecide", description="Networked opinion dynamics experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--scenario", required=True, help="scenario JSON path or bundled scenario name")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--workers", type=int, default=1, help="worker processes for sweeps")
        p.add_argument("--seed", type=int, default=None, help="seed for random initial conditions")

    for kind in KINDS:
        common(sub.add_parser(kind, help=f"run a '{kind}' scenario"))
    common(sub.add_parser("run", help="run a scenario of any kind"))
    sp = sub.add_parser("sweep", help="sweep one scalar scenario field")
    common(sp)
    sp.add_argument("--axis", required=True, help="field name or dotted path, e.g. experiment.beta")
    sp.add_argument("--values", required=True, help="comma list or start:stop:step")
    sub.add_parser("scenarios", help="list bundled scenarios")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "scenarios":
        for name in bundled_names():
            print(name)
        return 0
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_SCHEMA
    try:
        if args.command == "sweep":
            sc = load_scenario(args.scenario)
            sc.pop("sweep", None)
            res = sweep(sc, args.axis, _parse_values(args.values), args.out, args.workers, args.seed)
        else:
            kind = None if args.command == "run" else args.command
            res = run_scenario(args.scenario, args.out, args.seed, args.workers, kind)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    brief = {k: res[k] for k in ("name", "kind", "outputs", "failed") if k in res}
    print(json.dumps(brief, sort_keys=True))
    return 3 if res.get("failed") else 0


if __name__ == "__main__":
    sys.exit(main())
