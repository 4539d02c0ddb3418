"""Command line entry point: ``macc <command> [options]``.

Exit status: 0 on success, 1 when some user fails to decode, 2 on a
configuration or usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .delivery import generate_transmissions
from .errors import ConfigError, MaccError
from .harness import (
    CSV_COLUMNS,
    DEFAULT_SIM_F,
    EXAMPLES,
    format_rows,
    load_config,
    reproduce_example,
    run_sweep,
    simulate_trial,
)
from .prefetch import SymbolicState, decentralized_prefetch
from .rates import NotApplicable, closed_form_optimal, lower_bound_per_user, rate_per_user

log = logging.getLogger("macc")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
        log.info("wrote %s", out)
    else:
        sys.stdout.write(text)


def _config(args):
    if not args.config:
        raise ConfigError("--config", "this command needs a config file")
    config = load_config(args.config)
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        overrides["trials"] = args.trials
    if overrides:
        config = replace(config, **overrides)
    return config


def cmd_rate(args, bound=False) -> int:
    config = _config(args)
    params, table, _ = config.point()
    poly = lower_bound_per_user(table) if bound else rate_per_user(table)
    row = {
        "gamma": repr(float(params.gamma)),
        "K": table.K,
        "profile": " ".join(str(n) for n in table.counts),
        "polynomial": str(poly),
        "lb_pu" if bound else "rate_pu": repr(float(poly(params.gamma))),
    }
    if not bound:
        closed = closed_form_optimal(table)
        row["closed_form_pu"] = "" if closed is NotApplicable else repr(float(closed(params.gamma)))
    _emit(format_rows([row], args.format), args.out)
    return 0


def cmd_transmissions(args) -> int:
    config = _config(args)
    params, table, demands = config.point()
    if args.symbolic:
        state = SymbolicState(params)
    else:
        if config.F is None:
            params = params.with_(F=args.bits)
        state = decentralized_prefetch(params, config.seed)
    _emit(generate_transmissions(state, table, demands).dumps(), args.out)
    return 0


def cmd_verify(args) -> int:
    config = _config(args)
    params, table, demands = config.point()
    if args.bits is not None:
        params = params.with_(F=args.bits)
    elif config.F is None:
        params = params.with_(F=DEFAULT_SIM_F)
    rows = []
    for t in range(max(config.trials, 1)):
        result = simulate_trial(params, table, demands, config.seed + t)
        rows.append({
            "seed": result["seed"],
            "decode_ok": "true" if result["decode_ok"] else "false",
            "rate_pu": repr(float(result["rate_pu"])),
            "payload_bits": result["payload_bits"],
            "failed_users": " ".join(f"{i}.{l}" for i, l in result["failed_users"]),
        })
    _emit(format_rows(rows, args.format), args.out)
    failed = [r for r in rows if r["decode_ok"] != "true"]
    if failed:
        print(f"decoding failed for seeds {[r['seed'] for r in failed]}", file=sys.stderr)
        return 1
    return 0


def cmd_sweep(args) -> int:
    config = _config(args)
    if config.sweep_var is None:
        raise ConfigError("sweep", "the sweep command needs a sweep section")
    rows = run_sweep(config, jobs=args.jobs)
    _emit(format_rows(rows, args.format, CSV_COLUMNS), args.out)
    if any(r["decode_ok"] == "false" for r in rows):
        print("decoding failed in at least one trial", file=sys.stderr)
        return 1
    return 0


def cmd_reproduce(args) -> int:
    names = EXAMPLES if args.example == "all" else (args.example,)
    for name in names:
        text = reproduce_example(name)
        if args.out:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            (out / f"{name}.txt").write_text(text)
        else:
            sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="macc", description="Decentralized multi-access coded caching toolkit"
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True, trials=False, fmt=True):
        p.add_argument("--config", help="YAML/JSON experiment config")
        p.add_argument("--out", help="write output here instead of stdout")
        if seed:
            p.add_argument("--seed", type=int, help="override the config's base seed")
        if trials:
            p.add_argument("--trials", type=int, help="override the config's trial count")
        if fmt:
            p.add_argument("--format", choices=("csv", "json"), default="csv")
        return p

    common(sub.add_parser("rate", help="achievable rate per user"), seed=False)
    common(sub.add_parser("lower-bound", help="lower bound on the rate per user"), seed=False)

    p = common(sub.add_parser("transmissions", help="dump the transmission log"), fmt=False)
    p.add_argument("--symbolic", action="store_true", help="expected-size labels instead of sampled bits")
    p.add_argument("--bits", type=int, default=1024, help="file size F when the config has none")

    p = common(sub.add_parser("verify", help="simulate delivery and check every user decodes"), trials=True)
    p.add_argument("--bits", type=int, help="file size F (default: config value, else 2^17)")

    p = common(sub.add_parser("sweep", help="rate / bound / Monte Carlo table over M or r"), trials=True)
    p.add_argument("--jobs", type=int, default=1, help="worker processes for trials")

    p = sub.add_parser("reproduce", help="regenerate a worked-example table")
    p.add_argument("example", choices=EXAMPLES + ("all",))
    p.add_argument("--out", help="directory for <example>.txt files")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    handlers = {
        "rate": cmd_rate,
        "lower-bound": lambda a: cmd_rate(a, bound=True),
        "transmissions": cmd_transmissions,
        "verify": cmd_verify,
        "sweep": cmd_sweep,
        "reproduce": cmd_reproduce,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except MaccError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
