"""Command-line interface.

Subcommands:

- ``simulate {mse,epg,roc,sparsity}``: run a seeded Monte-Carlo figure from a
  TOML config and emit plot-ready CSV (or JSON-lines).
- ``bounds {min-m,theorem1,swap,stability}``: analytical calculators, JSON out.
- ``pmf``: exact occupancy distribution of the configured spectrum, CSV out.
- ``weights``: recovery weights for the configured spectrum, JSON out.

Exit status 0 on success; failures print a machine-readable JSON error to
stderr and exit nonzero.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import bounds as bounds_mod
from .config import ConfigError, ExperimentConfig, parse_config
from .harness import config_hash, run_figure, write_records
from .solvers import compute_weights
from .spectrum import make_block_spec, occupancy_pmf


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blocksense",
        description="Weighted-l1 recovery benchmarks for block-structured wideband spectrum sensing.",
    )
    parser.add_argument("--quiet", action="store_true", help="suppress progress logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_io(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="TOML config path, or '-' for stdin")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--trials", type=int, help="override the config trial count")
        p.add_argument("--workers", type=int, default=1, help="parallel trial workers (default 1)")
        p.add_argument("--out", help="output path (default: config [output].path, else stdout)")
        p.add_argument("--format", choices=["csv", "jsonl"], help="output format override")

    sim = sub.add_parser("simulate", help="run a Monte-Carlo figure")
    sim.add_argument("figure", choices=["mse", "epg", "roc", "sparsity"])
    add_config_io(sim)

    bnd = sub.add_parser("bounds", help="analytical calculators (JSON)")
    bnd_sub = bnd.add_subparsers(dest="calculator", required=True)

    minm = bnd_sub.add_parser("min-m", help="measurement-count lower bound")
    minm.add_argument("--kbar", type=float, nargs="+", help="per-block average sparsities")
    minm.add_argument("--delta", type=float, nargs="+", help="per-block RIP constants (or one shared)")
    minm.add_argument("--n", type=int, help="total band count (required with --kbar)")
    minm.add_argument("--sizes", type=int, nargs="+", help="block sizes (report mode)")
    minm.add_argument("--probs", type=float, nargs="+", help="block occupancy probabilities (report mode)")
    minm.add_argument("--design-sparsity", type=float, help="report mode: externally chosen sparsity level")
    minm.add_argument("--reference", type=float, help="report mode: external value to check against")

    th1 = bnd_sub.add_parser("theorem1", help="block-ordering success probability")
    th1.add_argument("--sizes", type=int, nargs="+", required=True)
    th1.add_argument("--probs", type=float, nargs="+", required=True)
    th1.add_argument("--strict", action="store_true", help="reject unordered blocks instead of reordering")

    swap = bnd_sub.add_parser("swap", help="pairwise occupancy-ordering swap probability")
    swap.add_argument("--ni", type=int, required=True)
    swap.add_argument("--qi", type=float, required=True)
    swap.add_argument("--nj", type=int, required=True)
    swap.add_argument("--qj", type=float, required=True)

    stab = bnd_sub.add_parser("stability", help="recovery error-envelope constants")
    stab.add_argument("--delta-ak", type=float, required=True)
    stab.add_argument("--delta-a1k", type=float, required=True)
    stab.add_argument("--a", type=float, required=True)

    pmf = sub.add_parser("pmf", help="exact occupancy distribution (CSV)")
    pmf.add_argument("--config", required=True)
    pmf.add_argument("--out", help="output path (default stdout)")

    wts = sub.add_parser("weights", help="recovery weights for the configured blocks (JSON)")
    wts.add_argument("--config", required=True)

    return parser


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    if args.config == "-":
        config = parse_config(sys.stdin)
    else:
        config = parse_config(Path(args.config))
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        overrides["trials"] = args.trials
    if getattr(args, "out", None) is not None:
        overrides["output_path"] = args.out
    if getattr(args, "format", None) is not None:
        overrides["output_format"] = args.format
    return dataclasses.replace(config, **overrides) if overrides else config


def _open_output(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = _load_config(args)
    records = run_figure(args.figure, config, workers=max(1, args.workers))
    stream, close = _open_output(config.output_path)
    try:
        write_records(records, config, stream)
    finally:
        if close:
            stream.close()
            logging.getLogger("blocksense").info(
                "wrote %d records to %s (config_hash=%s)",
                len(records),
                config.output_path,
                config_hash(config),
            )
    return 0


def _cmd_bounds(args: argparse.Namespace) -> int:
    if args.calculator == "min-m":
        if args.sizes or args.probs:
            if not (args.sizes and args.probs):
                raise ValueError("report mode needs both --sizes and --probs")
            spec = make_block_spec(args.sizes, args.probs)
            delta = args.delta[0] if args.delta else 0.5
            result = bounds_mod.min_measurements_report(
                spec,
                delta=delta,
                design_sparsity=args.design_sparsity,
                reference_value=args.reference,
            )
        else:
            if not args.kbar:
                raise ValueError("give either --kbar (plain bound) or --sizes/--probs (report)")
            if args.n is None:
                raise ValueError("--n is required with --kbar")
            deltas = args.delta or [0.5]
            if len(deltas) == 1:
                deltas = deltas * len(args.kbar)
            profile = bounds_mod.RipProfile(
                block_sparsities=tuple(args.kbar), deltas=tuple(deltas)
            )
            bound = bounds_mod.min_measurements(profile, args.n)
            result = {"value": bound.value, "ceiling": bound.ceiling}
    elif args.calculator == "theorem1":
        spec = make_block_spec(args.sizes, args.probs)
        result = {"probability": bounds_mod.theorem1_success_probability(spec, strict=args.strict)}
    elif args.calculator == "swap":
        result = {"probability": bounds_mod.swap_probability(args.ni, args.qi, args.nj, args.qj)}
    else:
        constants = bounds_mod.stability_constants(args.delta_ak, args.delta_a1k, args.a)
        result = {"c0": constants.c0, "c1": constants.c1}
    print(json.dumps(result, sort_keys=True))
    return 0


def _cmd_pmf(args: argparse.Namespace) -> int:
    config = _load_config(args)
    pmf = occupancy_pmf(config.spec)
    stream, close = _open_output(getattr(args, "out", None))
    try:
        stream.write("k,probability\n")
        for k, p in enumerate(pmf.probabilities):
            stream.write(f"{k},{format(float(p), '.12g')}\n")
    finally:
        if close:
            stream.close()
    return 0


def _cmd_weights(args: argparse.Namespace) -> int:
    config = _load_config(args)
    weights = compute_weights(config.spec)
    print(
        json.dumps(
            {
                "omega": [float(w) for w in weights.omega],
                "block_sizes": [int(s) for s in config.spec.sizes],
                "average_block_sparsity": [float(k) for k in config.spec.average_block_sparsity],
            },
            sort_keys=True,
        )
    )
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(message)s",
    )
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "bounds":
            return _cmd_bounds(args)
        if args.command == "pmf":
            return _cmd_pmf(args)
        if args.command == "weights":
            return _cmd_weights(args)
        raise ValueError(f"unknown command {args.command!r}")
    except (ConfigError, ValueError, RuntimeError, OSError, np.linalg.LinAlgError) as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 2


if __name__ == "__main__":
    sys.exit(main())
