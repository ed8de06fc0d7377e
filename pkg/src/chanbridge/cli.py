"""Command-line entry point: run catalog scenarios, inspect trace files.

    chanbridge run --scenario cancel-bidir --seed 3 --out trace.json
    chanbridge inspect trace.json --actor user --chain bitcoin

``run`` exits 0 only if every built-in scenario assertion held; the trace is
newline-delimited JSON with stable field ordering, so identical config and
seed give byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import sys

from .scenarios import SCENARIOS, ScenarioConfig, run_scenario
from .trace import Trace

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chanbridge",
        description="payment-channel bridge engine: scenario runner and trace inspector",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a named scenario end to end")
    run_p.add_argument("--scenario", default="happy-uni", choices=sorted(SCENARIOS),
                       help="catalog scenario to execute")
    run_p.add_argument("--seed", type=int, default=1, help="RNG seed; fixes the whole trace")
    run_p.add_argument("--fee", type=int, default=10_000, help="fixed per-transaction fee, satoshis")
    run_p.add_argument("--deposit", type=int, default=100_000_000,
                       help="channel deposit, satoshis")
    run_p.add_argument("--tlf", type=int, default=100,
                       help="deposit refund time-lock, blocks")
    run_p.add_argument("--tl", type=int, default=110,
                       help="remittance-output time-lock, blocks")
    run_p.add_argument("--mode", choices=("legacy", "segwit"), default="legacy",
                       help="transaction serialization mode")
    run_p.add_argument("--confirmations", type=int, default=6,
                       help="deposit confirmations before templating")
    run_p.add_argument("--out", metavar="TRACE.json", default=None,
                       help="write the NDJSON event trace here")

    inspect_p = sub.add_parser("inspect", help="filter and pretty-print a trace file")
    inspect_p.add_argument("trace", help="NDJSON trace file from a run")
    inspect_p.add_argument("--actor", default=None, help="only events from this actor")
    inspect_p.add_argument("--chain", default=None, help="only events on this chain")
    inspect_p.add_argument("--action", default=None, help="only events with this action")
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    config = ScenarioConfig(
        scenario=args.scenario,
        deposit=args.deposit,
        fee=args.fee,
        funding_timelock=args.tlf,
        update_timelock=args.tl,
        mode=args.mode,
        confirmations=args.confirmations,
        seed=args.seed,
    )
    result = run_scenario(config)
    if args.out:
        with open(args.out, "w") as handle:
            handle.write(result.trace_ndjson())
    print(json.dumps(result.report, indent=2))
    if not result.ok:
        print(f"scenario {result.name} FAILED", file=sys.stderr)
        return 1
    print(f"scenario {result.name} passed ({len(result.trace.events)} events)")
    return 0


def _cmd_inspect(args: argparse.Namespace) -> int:
    try:
        with open(args.trace) as handle:
            events = Trace.parse_ndjson(handle.read())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read trace: {exc}", file=sys.stderr)
        return 1
    shown = 0
    for event in events:
        if args.actor and event.get("actor") != args.actor:
            continue
        if args.chain and event.get("chain") != args.chain:
            continue
        if args.action and event.get("action") != args.action:
            continue
        print(json.dumps(event))
        shown += 1
    print(f"# {shown} of {len(events)} events", file=sys.stderr)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    return _cmd_inspect(args)


if __name__ == "__main__":
    sys.exit(main())
