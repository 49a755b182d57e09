"""Command-line entry point.

Usage: trotterlab <experiment> --config <path> [--out <dir>] [--seed <u64>]
[--workers <k>].  The config file is JSON (schema documented in the README);
command-line options override the corresponding config fields.  Exit codes:
0 all jobs ok, 2 invalid configuration or usage, 3 one or more jobs failed.
"""

from __future__ import annotations

import argparse
import json
import sys

from .harness import EXPERIMENTS, ConfigError, config_from_dict, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trotterlab",
        description="Trotterized Ising-chain experiment runner.",
    )
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True, help="JSON config file")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, help="RNG seed (overrides config)")
    parser.add_argument("--workers", type=int, help="worker count (overrides config)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        configured = raw.get("experiment")
        if configured is not None and configured != args.experiment:
            raise ConfigError(
                f"config is for {configured!r} but {args.experiment!r} was requested"
            )
        raw["experiment"] = args.experiment
        for name in ("out", "seed", "workers"):
            value = getattr(args, name)
            if value is not None:
                raw[name] = value
        cfg = config_from_dict(raw)
        if cfg.out is None:
            raise ConfigError("output directory required (config 'out' or --out)")
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    bundle = run_experiment(cfg)
    for row in bundle.jobs:
        tag = ", ".join(
            f"{k}={v}" for k, v in row["params"].items() if k != "index"
        )
        line = f"job {row['index']} [{tag}]: {row['status']}"
        if row["status"] == "failed":
            line += f" ({row['error']})"
        print(line)
    print(f"{bundle.status}: manifest at {bundle.manifest_path}")
    return 0 if bundle.status == "complete" else 3


if __name__ == "__main__":
    sys.exit(main())
