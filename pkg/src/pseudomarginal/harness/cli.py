"""Command line: ``run``, ``grid``, ``check`` and ``gen-data``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from ..targets.glm import generate_glm_dataset
from .checks import run_checks
from .config import load_config, load_grid
from .experiments import run_comparison_suite, run_experiment


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pseudomarginal", description=__doc__)
    sub = p.add_subparsers(dest="verb", required=True)

    run = sub.add_parser("run", help="run one experiment config")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--seed", type=int)
    run.add_argument("--out", type=str)

    grid = sub.add_parser("grid", help="run a comparison grid")
    grid.add_argument("--config", required=True, type=Path)
    grid.add_argument("--seed", type=int)
    grid.add_argument("--out", type=str)
    grid.add_argument("--workers", type=int, default=1)

    sub.add_parser("check", help="run the exact property suites")

    gen = sub.add_parser("gen-data", help="write a synthetic logit dataset")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", type=Path, required=True)
    gen.add_argument("--m", type=int, default=50)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.verb == "run":
            cfg = load_config(args.config, seed=args.seed, out_dir=args.out)
            summary = run_experiment(cfg)
            print(json.dumps({k: summary[k] for k in summary if k not in ("config", "replicas")}, indent=2, sort_keys=True))
            return 0
        if args.verb == "grid":
            configs = load_grid(args.config, seed=args.seed, out_dir=args.out)
            table = run_comparison_suite(configs, workers=args.workers)
            for row in table["rows"]:
                print(f"N={row['n']:<5} sweeps={row['sweeps']:<8} acceptance={row['acceptance_rate']:.4f}")
            return 0
        if args.verb == "check":
            results = run_checks()
            for r in results:
                print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
            return 0 if all(r.passed for r in results) else 1
        if args.verb == "gen-data":
            path = generate_glm_dataset(args.seed, args.m).to_csv(args.out)
            print(path)
            return 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 1  # pragma: no cover


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
