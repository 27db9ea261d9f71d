"""Command-line entry point: simulate, econ, verify, keygen, report.

Exit codes: 0 success, 1 chain verification failed, 2 usage or config error.
Results go to stdout as JSON unless ``--csv`` is given.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import econ
from .ledger import summarize_jsonl
from .podchain import check_chain_bytes
from .primitives import InvalidSeed, PodnetError, keygen_from_seed
from .sim import (
    ConfigError,
    load_config,
    run_scenario,
    run_sybil_sweep,
    sweep_to_csv,
    write_outputs,
)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _parse_sweep(spec: str) -> tuple[str, list[float]]:
    """``name=start:stop:step`` with an inclusive stop."""
    try:
        name, rng = spec.split("=", 1)
        start, stop, step = (Fraction(v) for v in rng.split(":"))
    except ValueError as exc:
        raise UsageError(f"bad sweep spec {spec!r}; expected name=start:stop:step") from exc
    name = name.strip()
    if name not in ("x", "y", "z", "m", "l", "p", "n"):
        raise UsageError(f"cannot sweep {name!r}")
    if step <= 0 or stop < start:
        raise UsageError("sweep needs step > 0 and stop >= start")
    values = []
    v = start
    while v <= stop:
        values.append(float(v))
        v += step
    return name, values


def _flatten(summary: dict) -> dict:
    flat = {}
    for key, value in summary.items():
        if key in ("params", "unbounded"):
            continue
        if isinstance(value, dict):
            for sub, inner in value.items():
                flat[f"{key}_{sub}"] = inner
        else:
            flat[key] = value
    return flat


def _write_csv(rows: list[dict], out) -> None:
    writer = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: "" if v is None else v for k, v in row.items()})


def cmd_econ(args) -> int:
    base = dict(x=args.x, y=args.y, z=args.z, m=args.m, l=args.l, p=args.p, n=args.n)
    extra = dict(daily_tx=args.daily_tx, payouts_per_peer_per_day=args.payouts_per_day)
    try:
        if args.sweep is None:
            summary = econ.econ_summary(econ.EconParams(**base), **extra)
            if args.csv:
                buf = io.StringIO()
                _write_csv([_flatten(summary)], buf)
                sys.stdout.write(buf.getvalue())
            else:
                sys.stdout.write(_dump(summary))
            return EXIT_OK
        name, values = _parse_sweep(args.sweep)
        rows = []
        for v in values:
            params = dict(base, **{name: int(v) if name in ("l", "n") else v})
            row = {name: v}
            row.update(_flatten(econ.econ_summary(econ.EconParams(**params), **extra)))
            rows.append(row)
    except econ.EconError as exc:
        raise UsageError(str(exc)) from exc
    if args.csv:
        _write_csv(rows, sys.stdout)
    else:
        sys.stdout.write(_dump(rows))
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = config.replace(seed=args.seed)
    if config.m_values:
        rows = run_sybil_sweep(config)
        if args.csv:
            text = sweep_to_csv(rows)
        else:
            text = _dump([
                {"m": r.m, "attacker_cost": r.attacker_cost, "attacker_revenue": r.attacker_revenue,
                 "net": r.net, "oracle_cost": r.oracle_cost, "oracle_payment": r.oracle_payment,
                 "net_se": r.net_se, "downloads": r.downloads}
                for r in rows
            ])
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    result = run_scenario(config)
    text = write_outputs(result, args.out, args.events, args.ledger_out)
    if not args.out:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        data = Path(args.chainfile).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {args.chainfile}: {exc.strerror}") from exc
    verdict = check_chain_bytes(data)
    out = {"valid": verdict.valid}
    if not verdict.valid:
        out["reason"] = verdict.reason
        out["index"] = verdict.index
    sys.stdout.write(_dump(out))
    return EXIT_OK if verdict.valid else EXIT_INVALID


def cmd_keygen(args) -> int:
    try:
        seed = bytes.fromhex(args.seed)
        kp = keygen_from_seed(seed)
    except (ValueError, InvalidSeed) as exc:
        raise UsageError(f"--seed must be 32 bytes of hex: {exc}") from exc
    sys.stdout.write(_dump({"seed": seed.hex(), "verifying_key": kp.verifying_key.hex()}))
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        with open(args.ledger) as fh:
            summary = summarize_jsonl(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {args.ledger}: {exc.strerror}") from exc
    except (ValueError, KeyError) as exc:
        raise UsageError(f"malformed ledger export: {exc}") from exc
    sys.stdout.write(_dump(summary))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="podnet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--events", help="write the event log as JSON lines")
    p.add_argument("--ledger-out", help="write settled transactions as JSON lines")
    p.add_argument("--csv", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("econ", help="closed-form economics")
    p.add_argument("--x", type=float, default=1.0)
    p.add_argument("--y", type=float, default=2.0)
    p.add_argument("--z", type=float, default=0.0)
    p.add_argument("--m", type=float, default=0.25)
    p.add_argument("--l", type=int, default=20)
    p.add_argument("--p", type=float, default=0.01)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--daily-tx", type=int, default=2_200_000)
    p.add_argument("--payouts-per-day", type=int, default=10)
    p.add_argument("--sweep")
    p.add_argument("--csv", action="store_true")
    p.set_defaults(func=cmd_econ)

    p = sub.add_parser("verify", help="verify a PODC0001 chain file")
    p.add_argument("chainfile")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("keygen", help="derive a key pair from a seed")
    p.add_argument("--seed", required=True)
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("report", help="summarize a ledger export")
    p.add_argument("--ledger", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, ConfigError, econ.EconError) as exc:
        print(f"podnet {args.command}: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"podnet {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PodnetError as exc:
        print(f"podnet {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
