"""Command-line driver: ``solve``, ``study``, ``regularity`` and ``export``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .assembly import SolverError, assemble, default_R, solve
from .cases import CaseError, get_case
from .config import KEYS, ConfigError, ExperimentConfig, parse_dims
from .fluxes import SplittingBreakdown
from .grid import GridError, generate_grid
from .mesh import MeshDegeneracyError, build_mesh
from .analysis import error_report
from .study import (EXIT_CONFIG, EXIT_MESH, EXIT_OK, EXIT_SOLVER, interpolation_error,
                    regularity_study, run_study)
from .tables import regularity_table
from .vtk import write_vtk

log = logging.getLogger("oblique_fv")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat 'key = value' file; flags override its entries")
    for key in KEYS:
        p.add_argument("--" + key.replace("_", "-"), dest=key, metavar=key.upper())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oblique-fv", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("solve", help="solve on one level and print the errors")
    _add_config_flags(p)
    p.add_argument("--dims", help="level to solve (default: first of --levels)")
    p.add_argument("--vtk", help="also write the solution to this VTK file")

    p = sub.add_parser("study", help="run a refinement study and write CSV tables")
    _add_config_flags(p)

    p = sub.add_parser("regularity", help="print the mesh regularity table")
    _add_config_flags(p)

    p = sub.add_parser("export", help="solve one level and write a legacy VTK file")
    _add_config_flags(p)
    p.add_argument("--dims")
    p.add_argument("--output", required=True, help="target .vtk path")
    return parser


def config_from_args(args) -> ExperimentConfig:
    base = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    raw = {k: getattr(args, k) for k in KEYS if getattr(args, k) is not None}
    if "case" in raw and "domain" not in raw:
        try:
            raw["domain"] = get_case(raw["case"]).domain.value
        except KeyError as exc:
            raise ConfigError(exc.args[0]) from None
    return ExperimentConfig.from_strings(raw, base)


def _solve_one(cfg: ExperimentConfig, dims):
    case = get_case(cfg.case)
    mesh = build_mesh(generate_grid(cfg.domain, dims, cfg.amplitude, cfg.seed))
    R = cfg.R if cfg.R is not None else default_R(mesh, case)
    R = R if cfg.scheme == "central" else None
    sol, srep = solve(assemble(mesh, case, cfg.scheme, R), tol=cfg.tol, max_iter=cfg.max_iter)
    return case, mesh, sol, error_report(mesh, sol, case, cfg.scheme, srep, R)


def _print_report(rep) -> None:
    print(f"scheme={rep.scheme} h={rep.h:.4e} cells={rep.n_cells} dofs={rep.n_dofs} "
          f"iterations={rep.iterations} residual={rep.residual:.2e}")
    for norm in ("L2_Omega", "L2_Gamma", "Vh_Omega", "Vh_Gamma", "Vh"):
        v = rep.value(norm)
        if v is not None:
            print(f"  {norm:9s} {v:.6e}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    try:
        cfg = config_from_args(args)
        if args.verb in ("solve", "export"):
            if args.verb == "export" and not args.output.strip():
                parser.error("--output must not be empty")
            dims = parse_dims(args.dims) if args.dims else cfg.levels[0]
            case, mesh, sol, rep = _solve_one(cfg, dims)
            _print_report(rep)
            target = args.output if args.verb == "export" else args.vtk
            if target:
                write_vtk(mesh, target, sol, interpolation_error(mesh, sol, case))
                print(f"wrote {target}")
            return EXIT_OK
        if args.verb == "study":
            res = run_study(cfg, write=True, log=print)
            print(res.error_csv(), end="")
            for name, path in res.files.items():
                log.info("%s: %s", name, path)
            return res.exit_code
        if args.verb == "regularity":
            text = regularity_table(regularity_study(cfg))
            out = Path(cfg.output_dir)
            out.mkdir(parents=True, exist_ok=True)
            (out / f"{cfg.domain}_regularity.csv").write_text(text)
            print(text, end="")
            return EXIT_OK
    except (ConfigError, CaseError, GridError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MeshDegeneracyError as exc:
        print(f"mesh degeneracy: {exc}", file=sys.stderr)
        return EXIT_MESH
    except SplittingBreakdown as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except SolverError as exc:
        print(f"solver failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    parser.error(f"unknown verb {args.verb}")
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
