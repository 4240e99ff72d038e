"""Command line entry point: ``distxarm-bench``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import yaml

from .bench import (
    ConfigError,
    ExperimentConfig,
    calibrate_C,
    emit_csv,
    run_sweep,
    summarize,
    verify_bounds,
)
from .bounds import BoundParams

UNIT_SIGMA = 1.0


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.replace(" ", "").split(",") if tok]


def _seeds(text: str) -> list[int]:
    """``20`` means seeds 0..19; ``3,7,11`` lists seeds explicitly."""
    if "," in text:
        return _int_list(text)
    return list(range(int(text)))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="distxarm-bench",
        description="Run loss-versus-budget sweeps of the distributed level-order X-armed bandit search.",
    )
    parser.add_argument("--config", type=Path, help="YAML file with flat experiment keys")
    parser.add_argument("--objective", choices=["double_sine", "garland"])
    parser.add_argument("--players", type=_int_list, help="comma list, e.g. 1,4,16")
    parser.add_argument("--budget", type=_int_list, help="per-player budgets, ascending, e.g. 400,1600")
    parser.add_argument("--delta", type=float)
    parser.add_argument("--sigma", type=float, help="Gaussian noise standard deviation")
    parser.add_argument("--noise", choices=["none", "gaussian", "uniform"])
    parser.add_argument("--unit-noise", action="store_true", help=f"use sigma={UNIT_SIGMA:g}")
    parser.add_argument("--seeds", type=_seeds, help="seed count or comma list")
    parser.add_argument("--C", type=float, dest="C", help="set-size constant (default: calibrated)")
    parser.add_argument("--workers", type=int)
    parser.add_argument("--out", help="CSV output path")
    parser.add_argument("--verify-bounds", action="store_true")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    data = {}
    if args.config is not None:
        with open(args.config) as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise ConfigError(f"{args.config}: expected a key-value document")
    overrides = {
        "objective": args.objective,
        "players": args.players,
        "budgets": args.budget,
        "delta": args.delta,
        "sigma": args.sigma,
        "noise": args.noise,
        "seeds": args.seeds,
        "C": args.C,
        "workers": args.workers,
        "out": args.out,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    if args.unit_noise:
        data["sigma"] = UNIT_SIGMA
        data.setdefault("noise", "gaussian")
    return ExperimentConfig.from_mapping(data)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    records = run_sweep(config)
    print(f"objective={config.objective} noise={config.noise} sigma={config.sigma:g} "
          f"delta={config.delta:g} seeds={len(config.seeds)}")
    print(f"{'m':>4} {'n':>7} {'runs':>5} {'mean loss':>11} {'median':>11} {'se':>10}")
    for row in summarize(records):
        print(f"{row['m']:>4} {row['n']:>7} {row['runs']:>5} {row['mean_loss']:>11.6f} "
              f"{row['median_loss']:>11.6f} {row['se']:>10.6f}")
    failed = [r for r in records if r.error]
    if failed:
        print(f"{len(failed)} runs failed", file=sys.stderr)

    if config.out:
        path = emit_csv(records, config.out)
        print(f"wrote {len(records)} records to {path}")

    status = 0
    if args.verify_bounds:
        C = config.C if config.C is not None else calibrate_C(config.objective, config.smoothness, config.delta)
        p = BoundParams(1, 1, config.delta, config.d, C, config.nu1, config.rho)
        report = verify_bounds(records, p)
        print(f"bound checks (d={config.d:g}, C={C:g}, {len(report.checks)} records):")
        for name, frac in report.summary().items():
            print(f"  {name:<9} {frac:7.2%}")
        if not report.deterministic_ok:
            print("round bound violated", file=sys.stderr)
            status = 1
    return status


if __name__ == "__main__":
    sys.exit(main())
