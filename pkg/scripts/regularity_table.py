#!/usr/bin/env python3
"""Print regularity factors over a refinement family, optionally for several seeds."""
import argparse

from oblique_fv import build_mesh, generate_grid
from oblique_fv.config import parse_levels
from oblique_fv.regularity import regularity_report
from oblique_fv.tables import regularity_table


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--domain", default="cube")
    p.add_argument("--levels", default="3,7,15,31")
    p.add_argument("--amplitude", type=float, default=0.15)
    p.add_argument("--seeds", default="42")
    args = p.parse_args(argv)
    for seed in (int(s) for s in args.seeds.split(",")):
        reports = [regularity_report(build_mesh(generate_grid(args.domain, d, args.amplitude, seed)))
                   for d in parse_levels(args.levels)]
        print(f"# {args.domain}, amplitude {args.amplitude}, seed {seed}")
        print(regularity_table(reports))
        for r in reports[-1:]:
            for name, off in r.worst.items():
                print(f"#   worst {name}: face {off.face} -> {off.value:.4f}")


if __name__ == "__main__":
    main()
