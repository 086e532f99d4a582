"""Command-line entry point: ``simbf-campaign``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from simbf.errors import ConfigurationError

from .campaign import run_campaign, write_csv, write_summary
from .config import SCHEMES, SWEEPS, CampaignConfig, Sweep, load_config

log = logging.getLogger("simbf")


def _number(text: str):
    try:
        return int(text)
    except ValueError:
        return float(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="simbf-campaign", description="Monte Carlo sum-rate campaign for SIM-aided downlink beamforming.")
    p.add_argument("--config", type=Path, help="YAML configuration (defaults apply to missing keys)")
    p.add_argument("--seed", type=int, help="master seed override")
    p.add_argument("--trials", type=int, help="number of trials override")
    p.add_argument("--schemes", help=f"comma-separated subset of {','.join(SCHEMES)}")
    p.add_argument("--sweep", metavar="NAME=V1,V2,...", help=f"sweep override, NAME in {','.join(SWEEPS[1:])}")
    p.add_argument("--out", type=Path, help="output directory (default from config)")
    p.add_argument("--workers", type=int, help="parallel worker processes")
    p.add_argument("--timing", action="store_true", help="record wall-clock times (breaks byte-identical reruns)")
    p.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    return p


def configure(args) -> CampaignConfig:
    config = load_config(args.config) if args.config else CampaignConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.schemes:
        changes["schemes"] = tuple(s.strip() for s in args.schemes.split(",") if s.strip())
    if args.sweep:
        name, _, values = args.sweep.partition("=")
        if not values:
            raise ConfigurationError(f"sweep must look like NAME=V1,V2, got {args.sweep!r}")
        changes["sweep"] = Sweep(name=name.strip(), values=tuple(_number(v) for v in values.split(",")))
    if args.out is not None:
        changes["out_dir"] = str(args.out)
    if args.workers is not None:
        changes["workers"] = args.workers
    if args.timing:
        changes["timing"] = True
    return replace(config, **changes).validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = configure(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    log.info("running %d trial(s) x %d sweep point(s)", config.trials, len(config.sweep.values))
    result = run_campaign(config)
    try:
        out = Path(config.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(result.rows, out / "trials.csv")
        write_summary(result.summary, out / "summary.json")
    except OSError as exc:
        print(f"cannot write results: {exc}", file=sys.stderr)
        return 1
    log.info("wrote %d rows to %s", len(result.rows), out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
