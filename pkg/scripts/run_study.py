#!/usr/bin/env python3
"""Run the convergence tables for the synthetic cases.

    python scripts/run_study.py                    # cube, all schemes, levels 3..31
    python scripts/run_study.py --case tesseroid --levels 3,7,15
"""
import argparse
import sys

from oblique_fv.cases import get_case
from oblique_fv.config import ExperimentConfig, parse_levels
from oblique_fv.study import run_study

DEFAULT_LEVELS = "3,7,15,31"


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--case", default="cube_const")
    p.add_argument("--schemes", default="central,upwind,splitting")
    p.add_argument("--levels", default=DEFAULT_LEVELS)
    p.add_argument("--amplitude", type=float, default=0.15)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--output-dir", default="results")
    args = p.parse_args(argv)

    domain = get_case(args.case).domain.value
    code = 0
    for scheme in args.schemes.split(","):
        cfg = ExperimentConfig(domain=domain, case=args.case, scheme=scheme.strip(),
                               levels=parse_levels(args.levels), amplitude=args.amplitude,
                               seed=args.seed, output_dir=args.output_dir)
        print(f"== {args.case} / {cfg.scheme}")
        res = run_study(cfg, log=print)
        print(res.error_csv())
        code = max(code, res.exit_code)
    return code


if __name__ == "__main__":
    sys.exit(main())
