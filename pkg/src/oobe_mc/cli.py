"""Command line entry point: ``oobe-mc run|compare|sweep``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ConfigError, PairingError
from .runner import compare, load_manifest, parse_values, penalty_table_csv, run, sweep
from .scenario import parse_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PAIRING = 3
EXIT_IO = 4

log = logging.getLogger("oobe_mc")


def _load(args):
    s = parse_scenario(args.config)
    changes = {}
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.trials is not None:
        changes["trials"] = args.trials
    return s.replace(**changes) if changes else s


def cmd_run(args) -> int:
    s = _load(args)
    m = run(s, args.out, write_cdf=args.cdf)
    st = m.statistics
    print(f"trials={st.n_trials} scenario_hash={m.scenario_hash}")
    for name in ("down", "up", "combined"):
        ms = st[name]
        print(f"{name:>9}: mean {ms.mean_dbm:9.4f} dBm  p99 {ms.percentile_dbm(99.0):9.4f} dBm")
    print(f"outputs written to {args.out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    report = compare(load_manifest(args.a), load_manifest(args.b), args.knob)
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def cmd_sweep(args) -> int:
    s = _load(args)
    rows = sweep(s, args.knob, parse_values(args.values), args.out)
    sys.stdout.write(penalty_table_csv(rows, s.hash(exclude=args.knob)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="oobe-mc", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run every trial of a scenario")
    r.add_argument("--config", required=True, help="scenario JSON file")
    r.add_argument("--seed", type=int, help="override master_seed")
    r.add_argument("--trials", type=int, help="override trials")
    r.add_argument("--out", default="out", help="output directory (default: out)")
    r.add_argument("--cdf", action="store_true", help="also write cdf.csv")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="penalty of run A relative to run B")
    c.add_argument("--a", required=True, help="manifest.json (or its directory) of run A")
    c.add_argument("--b", required=True, help="manifest.json (or its directory) of run B")
    c.add_argument("--knob", required=True, help="the one scenario field allowed to differ")
    c.add_argument("--out", help="also write the report to this file")
    c.set_defaults(func=cmd_compare)

    w = sub.add_parser("sweep", help="paired runs over values of one scenario field")
    w.add_argument("--config", required=True)
    w.add_argument("--knob", required=True, help="dotted scenario field, e.g. repeater_factor_f")
    w.add_argument("--values", required=True, help="comma separated, first value is the baseline")
    w.add_argument("--seed", type=int)
    w.add_argument("--trials", type=int)
    w.add_argument("--out", default="sweep")
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PairingError as exc:
        print(f"pairing error: {exc}", file=sys.stderr)
        return EXIT_PAIRING
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
