"""Operator command line.

    geoprobe probe   --config campaign.json [--seed N] [--out DIR] [--replay FILE]
    geoprobe handoff --tensor tensor.json --market market.json [--now ISO8601]
    geoprobe serve   --config campaign.json --port 8000 [--out DIR]

Exit codes are stable:

    0  success (probe completed / handoff EXECUTED / server stopped cleanly)
    1  unexpected runtime failure (error surfaced verbatim on stderr)
    2  configuration or wire-schema error (all violations listed)
    3  handoff denied (reason printed: BAD_SIGNATURE, EXPIRED,
       OUT_OF_SCOPE, or REPLAY)
    4  infeasible portfolio target
    5  no specialist agent registered for the execution vector

The broker signing key comes from the GEOPROBE_BROKER_KEY environment
variable; handoff refuses to run without it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from .campaign import run_campaign
from .config import load_config
from .errors import (
    ConfigError,
    GeoprobeError,
    InfeasibleTargetError,
    ModelError,
    RoutingError,
    SchemaError,
)
from .finquant import FINQUANT_VECTOR, FinQuantAgent, load_market_model
from .handoff import AgentRegistry, Broker, parse_tensor
from .ledger import Ledger
from .report import write_artifacts

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2
EXIT_DENIED = 3
EXIT_INFEASIBLE = 4
EXIT_ROUTING = 5

BROKER_KEY_ENV = "GEOPROBE_BROKER_KEY"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geoprobe",
        description="Probe campaigns, arbitration service, and intent handoff.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    probe = sub.add_parser("probe", help="run a probe campaign and write its artifacts")
    probe.add_argument("--config", required=True, help="campaign config JSON")
    probe.add_argument("--seed", type=int, default=None, help="override master seed")
    probe.add_argument("--out", default=None, help="override output directory")
    probe.add_argument("--replay", default=None, help="arbitration replay file")
    probe.add_argument("--workers", type=int, default=None, help="probe worker count")
    probe.add_argument(
        "--no-figures", action="store_true", help="skip rendering PNG figures"
    )

    handoff = sub.add_parser("handoff", help="execute one intent tensor")
    handoff.add_argument("--tensor", required=True, help="intent tensor JSON file")
    handoff.add_argument("--market", required=True, help="market model JSON file")
    handoff.add_argument(
        "--now",
        default=None,
        help="presentation instant (ISO 8601); defaults to wall clock",
    )

    serve = sub.add_parser("serve", help="serve the arbitration queue over HTTP")
    serve.add_argument("--config", required=True, help="campaign config JSON")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--out", default=None, help="directory holding ledger.jsonl")
    return parser


def cmd_probe(args) -> int:
    overrides = {
        "master_seed": args.seed,
        "output_dir": args.out,
        "replay_file": args.replay,
        "workers": args.workers,
    }
    if args.no_figures:
        overrides["render_figures"] = False
    try:
        config = load_config(args.config, overrides=overrides)
    except ConfigError as exc:
        print("invalid campaign config:", file=sys.stderr)
        for violation in exc.violations:
            print(f"  - {violation}", file=sys.stderr)
        return EXIT_CONFIG

    config.output_dir.mkdir(parents=True, exist_ok=True)
    ledger_path = config.output_dir / "ledger.jsonl"
    if ledger_path.exists():
        ledger_path.unlink()  # a campaign always starts a fresh ledger
    try:
        result = run_campaign(config, ledger_path)
        paths = write_artifacts(result, config, config.output_dir)
    except GeoprobeError as exc:
        print(f"campaign failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    print(f"probes:        {sum(result.route_histogram.values())}")
    for name, count in sorted(result.route_histogram.items()):
        print(f"  {name:<18} {count}")
    if result.lambda_hat is not None:
        print(f"decay rate:    configured={config.decay.decay_rate:g} recovered={result.lambda_hat:.6f}")
    if result.model is not None:
        print(f"iar model:     beta0={result.model.beta0:.4f} gamma={result.model.gamma:.4f}")
    else:
        print(f"iar model:     fit skipped ({result.fit_skipped_reason})")
    print(f"ledger:        {ledger_path}")
    for name, path in paths.items():
        print(f"{name + ':':<14} {path}")
    return EXIT_OK


def cmd_handoff(args) -> int:
    key = os.environ.get(BROKER_KEY_ENV)
    if not key:
        print(f"broker signing key required: set {BROKER_KEY_ENV}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        tensor = parse_tensor(Path(args.tensor).read_text())
    except FileNotFoundError:
        print(f"tensor file not found: {args.tensor}", file=sys.stderr)
        return EXIT_CONFIG
    except SchemaError as exc:
        print(f"invalid intent tensor: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        market = load_market_model(args.market)
    except FileNotFoundError:
        print(f"market file not found: {args.market}", file=sys.stderr)
        return EXIT_CONFIG
    except (SchemaError, ModelError) as exc:
        print(f"invalid market model: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    now = (
        datetime.fromisoformat(args.now.replace("Z", "+00:00"))
        if args.now
        else datetime.now(timezone.utc)
    )
    registry = AgentRegistry()
    registry.register(FINQUANT_VECTOR, FinQuantAgent(market))
    broker = Broker(key.encode(), registry)
    try:
        receipt = broker.handoff(tensor, now)
    except RoutingError as exc:
        print(f"routing error: {exc}", file=sys.stderr)
        return EXIT_ROUTING
    except InfeasibleTargetError as exc:
        print(f"infeasible target: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE

    print(json.dumps(receipt.to_wire(), indent=2, sort_keys=True))
    if receipt.status == "DENIED":
        print(f"handoff denied: {receipt.deny_reason}", file=sys.stderr)
        return EXIT_DENIED
    return EXIT_OK


def cmd_serve(args) -> int:
    try:
        config = load_config(args.config, overrides={"output_dir": args.out})
    except ConfigError as exc:
        print("invalid campaign config:", file=sys.stderr)
        for violation in exc.violations:
            print(f"  - {violation}", file=sys.stderr)
        return EXIT_CONFIG

    import uvicorn

    from .service import create_app

    config.output_dir.mkdir(parents=True, exist_ok=True)
    ledger = Ledger(config.output_dir / "ledger.jsonl")
    app = create_app(config, ledger)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except SystemExit as exc:  # uvicorn signals startup failures this way
        return int(exc.code or EXIT_RUNTIME)
    except OSError as exc:
        print(f"server startup failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "probe":
        return cmd_probe(args)
    if args.command == "handoff":
        return cmd_handoff(args)
    return cmd_serve(args)


if __name__ == "__main__":
    sys.exit(main())
