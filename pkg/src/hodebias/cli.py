"""Command-line entry point: ``hodebias ratio`` and ``hodebias normality``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

from .errors import ConfigError, EmptyStudy
from .simlab.experiment import (
    GramModelConfig,
    RegressionModelConfig,
    run_ks_study,
    run_ratio_experiment,
)
from .simlab.report import emit

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

log = logging.getLogger("hodebias")


def _gamma_list(text: str) -> list[float]:
    try:
        return [float(g) for g in text.split(",") if g.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad gamma list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hodebias", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("ratio", "squared-error ratios against the plug-in estimator"),
        ("normality", "KS distance of standardised cross-fitted errors"),
    ):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", help="JSON file whose keys are config field names")
        s.add_argument("--seed", type=int)
        s.add_argument("--out", help="output path (stdout if omitted)")
        s.add_argument("--format", choices=("csv", "md", "json"), default="csv")
        s.add_argument("--threads", type=int, default=1)
        s.add_argument("--reps", type=int, help="override the replication count")
        s.add_argument("--gamma", type=_gamma_list, help="comma-separated gamma grid (ratio only)")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def _load_config(cls, args):
    data = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as err:
                raise ConfigError(f"{args.config}: {err}") from None
    cfg = cls.from_dict(data)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.reps is not None:
        overrides["replications"] = args.reps
    if args.gamma is not None:
        if cls is not RegressionModelConfig:
            raise ConfigError("--gamma applies to the ratio experiment only")
        overrides["gamma_grid"] = args.gamma
    if overrides:
        try:
            cfg = dataclasses.replace(cfg, **overrides)
        except (TypeError, ValueError) as err:
            raise ConfigError(str(err)) from None
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "ratio":
            cfg = _load_config(RegressionModelConfig, args)
        else:
            cfg = _load_config(GramModelConfig, args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO

    try:
        if args.command == "ratio":
            result = run_ratio_experiment(cfg, threads=args.threads)
        else:
            result = run_ks_study(cfg, threads=args.threads)
    except (ConfigError, EmptyStudy) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        text = emit(result, args.format, args.out)
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO
    if args.out is None:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
