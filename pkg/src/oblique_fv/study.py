"""Refinement studies: one grid, mesh, regularity audit and solve per level."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import ErrorReport, error_report
from .assembly import SingularMatrixError, SolverError, assemble, default_R, solve
from .cases import Case, CaseError, get_case
from .config import ExperimentConfig
from .fields import DiscreteField
from .fluxes import SplittingBreakdown
from .grid import generate_grid
from .mesh import Mesh, MeshDegeneracyError, build_mesh
from .regularity import RegularityReport, regularity_report
from .tables import error_table, mesh_stats_table, regularity_table, status_table

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_MESH = 0, 2, 3, 4


@dataclass
class LevelResult:
    dims: tuple
    status: str  # "ok", "splitting breakdown", "solver failed", "mesh degenerate"
    message: str = ""
    mesh: Mesh | None = None
    solution: DiscreteField | None = None
    report: ErrorReport | None = None
    regularity: RegularityReport | None = None
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def exit_code(self) -> int:
        return {"ok": EXIT_OK, "mesh degenerate": EXIT_MESH}.get(self.status, EXIT_SOLVER)


@dataclass
class StudyResult:
    config: ExperimentConfig
    levels: list[LevelResult] = field(default_factory=list)
    files: dict[str, Path] = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        codes = [lv.exit_code for lv in self.levels]
        return max(codes, default=EXIT_OK)

    @property
    def reports(self) -> list[ErrorReport]:
        return [lv.report for lv in self.levels if lv.ok]

    def error_csv(self) -> str:
        rows = [lv.report if lv.ok else (lv.mesh.h if lv.mesh else float("nan"), lv.status)
                for lv in self.levels]
        return error_table(self.config.scheme, rows)

    def regularity_csv(self) -> str:
        return regularity_table([lv.regularity for lv in self.levels if lv.regularity])

    def status_csv(self) -> str:
        rows = []
        for n, lv in enumerate(self.levels):
            rows.append({
                "level": n, "dims": "x".join(map(str, lv.dims)),
                "h": f"{lv.mesh.h:.6e}" if lv.mesh else "", "status": lv.status,
                "iterations": lv.report.iterations if lv.report else "",
                "residual": f"{lv.report.residual:.3e}" if lv.report else "",
                "message": lv.message})
        return status_table(rows)


def run_level(config: ExperimentConfig, dims, case: Case | None = None,
              with_regularity: bool = True) -> LevelResult:
    """Solve one level; failures are caught and reported in the result."""
    case = case or get_case(config.case)
    t0 = time.perf_counter()
    try:
        grid = generate_grid(config.domain, dims, config.amplitude, config.seed)
        mesh = build_mesh(grid)
    except MeshDegeneracyError as exc:
        return LevelResult(tuple(dims), "mesh degenerate", str(exc))
    reg = regularity_report(mesh) if with_regularity else None
    R = config.R if config.R is not None else default_R(mesh, case)
    try:
        system = assemble(mesh, case, config.scheme, R if config.scheme == "central" else None)
        sol, srep = solve(system, tol=config.tol, max_iter=config.max_iter)
    except SplittingBreakdown as exc:
        return LevelResult(tuple(dims), "splitting breakdown", str(exc), mesh, regularity=reg,
                           seconds=time.perf_counter() - t0)
    except (SolverError, SingularMatrixError) as exc:
        return LevelResult(tuple(dims), "solver failed", str(exc), mesh, regularity=reg,
                           seconds=time.perf_counter() - t0)
    rep = error_report(mesh, sol, case, config.scheme, srep, R if config.scheme == "central" else None)
    return LevelResult(tuple(dims), "ok", "", mesh, sol, rep, reg, time.perf_counter() - t0)


def run_study(config: ExperimentConfig, write: bool = True, log=None) -> StudyResult:
    """Run every level in order and (optionally) write the CSV artifacts.

    Raises :class:`CaseError` or :class:`GridError` for invalid input; per
    level failures are recorded and the study moves on.
    """
    case = get_case(config.case)
    if case.domain.value != config.domain:
        raise CaseError(f"case {case.name!r} is defined on the {case.domain.value} domain, "
                        f"not {config.domain}")
    result = StudyResult(config)
    for dims in config.levels:
        lv = run_level(config, dims, case)
        result.levels.append(lv)
        if log is not None:
            h = f"{lv.mesh.h:.4e}" if lv.mesh else "-"
            log(f"{'x'.join(map(str, dims))}: h={h} {lv.status} ({lv.seconds:.1f} s)"
                + (f" {lv.message}" if lv.message else ""))
    if write:
        out = Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = f"{config.case}_{config.scheme}"
        files = {
            "errors": out / f"{stem}_errors.csv",
            "regularity": out / f"{stem}_regularity.csv",
            "status": out / f"{stem}_status.csv",
            "mesh": out / f"{stem}_mesh.csv",
            "config": out / f"{stem}.cfg",
        }
        files["errors"].write_text(result.error_csv())
        files["regularity"].write_text(result.regularity_csv())
        files["status"].write_text(result.status_csv())
        files["mesh"].write_text(mesh_stats_table([lv.mesh.stats() for lv in result.levels if lv.mesh]))
        config.save(files["config"])
        result.files = files
    return result


def regularity_study(config: ExperimentConfig) -> list[RegularityReport]:
    out = []
    for dims in config.levels:
        mesh = build_mesh(generate_grid(config.domain, dims, config.amplitude, config.seed))
        out.append(regularity_report(mesh))
    return out


def interpolation_error(mesh: Mesh, solved: DiscreteField, case: Case) -> np.ndarray:
    """Cell-wise error ``T_p - T(x_p)`` for export."""
    return np.asarray(solved.cells) - case.exact(mesh.cell_points)

