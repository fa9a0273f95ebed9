"""Command line entry point: ``ofdmsm sweep|channel|selftest``."""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .core import SimConfigError
from .harness import (
    ConfigError,
    emit_csv,
    emit_plot_data,
    parse_config,
    resolve_channel,
    run_sweep,
)
from .harness.selftest import run_selftest

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _overrides(args) -> dict[str, str]:
    out = {}
    for item in args.set or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        out[key.strip()] = value.strip()
    for key in ("seed", "max_frames", "target_errors", "snr_db"):
        value = getattr(args, key, None)
        if value is not None:
            out[key] = str(value)
    return out


def _cmd_sweep(args) -> int:
    spec = parse_config(args.config, _overrides(args))
    channel = resolve_channel(spec)
    report = run_sweep(spec.config, spec.schemes, channel, workers=args.workers,
                       m_orders=spec.m_orders)
    emit_csv(report, sys.stdout if args.output == "-" else args.output)
    if args.plot_data:
        emit_plot_data(report, args.plot_data)
    return EXIT_OK


def _cmd_channel(args) -> int:
    spec = parse_config(args.config, _overrides(args))
    channel = resolve_channel(spec)
    with np.printoptions(precision=6, suppress=False, linewidth=120):
        print(channel.h)
    rho = channel.rho if channel.shape[0] == channel.shape[1] else float("nan")
    print(f"provenance: {channel.provenance}")
    print(f"rho: {rho:.6g}")
    return EXIT_OK


def _cmd_selftest(args) -> int:
    return EXIT_OK if run_selftest() else EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ofdmsm", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("config", help="key = value configuration file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
        p.add_argument("--seed", type=int)
        p.add_argument("--max-frames", dest="max_frames", type=int)
        p.add_argument("--target-errors", dest="target_errors", type=int)
        p.add_argument("--snr-db", dest="snr_db", help="comma-separated SNR grid in dB")

    p = sub.add_parser("sweep", help="run a BER sweep and write CSV")
    add_common(p)
    p.add_argument("-o", "--output", default="-", help="CSV path (default: stdout)")
    p.add_argument("-j", "--workers", type=int, default=1)
    p.add_argument("--plot-data", metavar="PATH", help="also write (snr_db, log10_ber) pairs")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("channel", help="print the channel matrix and its condition number")
    add_common(p)
    p.set_defaults(func=_cmd_channel)

    p = sub.add_parser("selftest", help="run the built-in invariant checks")
    p.set_defaults(func=_cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (ConfigError, SimConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
