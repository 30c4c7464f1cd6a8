"""Interpolant, discrete norms, error reports and convergence rates."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .assembly import SolveReport
from .cases import Case, builtin_cases  # noqa: F401  (re-exported)
from .fields import DiscreteField
from .mesh import Mesh


def interpolate(mesh: Mesh, case_or_fn, with_edges: bool = True) -> DiscreteField:
    """Point values at representative points, edge averages (2-point Gauss) on Gamma edges."""
    fn = case_or_fn.exact if isinstance(case_or_fn, Case) else case_or_fn
    cells = np.asarray(fn(mesh.cell_points), float)
    pdata = np.zeros(mesh.n_points)
    dp = mesh.dirichlet_points
    pdata[dp] = fn(mesh.points[dp])
    edges = np.asarray(fn(mesh.edge_gauss), float).mean(axis=1) if with_edges else None
    return DiscreteField(cells, edges, pdata)


@dataclass(frozen=True)
class Seminorms:
    Vh_Omega: float
    Vh_Gamma: float | None
    Vh: float | None
    L2_Omega: float
    L2_Gamma: float

    def __iter__(self):
        return iter((self.Vh_Omega, self.Vh_Gamma, self.Vh, self.L2_Omega, self.L2_Gamma))


def seminorms(mesh: Mesh, f: DiscreteField) -> Seminorms:
    """All discrete norms of ``f``; Dirichlet faces use the stored data as ``phi_q``."""
    pv = f.point_values(mesh)
    jump = pv[mesh.cell_pid[mesh.face_p]] - pv[mesh.face_q_point]
    vo2 = float(np.sum(mesh.face_area / mesh.face_d * jump**2))
    cells = np.asarray(f.cells, float)
    l2o = math.sqrt(float(np.sum(mesh.cell_volume * cells**2)))
    l2g = math.sqrt(float(np.sum(mesh.gface_area * cells[mesh.gface_cell] ** 2)))
    vg = vh = None
    if f.edges is not None:
        e = np.asarray(f.edges, float)[mesh.gface_edges]
        length = mesh.edge_length[mesh.gface_edges]
        vg2 = float(np.sum(length / mesh.gface_dperp * (cells[mesh.gface_cell][:, None] - e) ** 2))
        vg = math.sqrt(vg2)
        vh = math.sqrt(vo2 + mesh.h_gamma * vg2)
    return Seminorms(math.sqrt(vo2), vg, vh, l2o, l2g)


@dataclass
class ErrorReport:
    h: float
    h_gamma: float
    scheme: str
    L2_Omega: float
    L2_Gamma: float
    Vh_Omega: float
    Vh_Gamma: float | None = None
    Vh: float | None = None
    n_dofs: int = 0
    n_cells: int = 0
    iterations: int = 0
    residual: float = 0.0
    R: float | None = None
    extra: dict = field(default_factory=dict)

    def value(self, norm: str) -> float | None:
        return getattr(self, norm)


def error_report(mesh: Mesh, solved: DiscreteField, case: Case, scheme: str = "central",
                 solve_report: SolveReport | None = None, R: float | None = None) -> ErrorReport:
    exact = interpolate(mesh, case, with_edges=solved.edges is not None)
    err = solved - exact
    err.point_data[:] = 0.0
    if err.edges is not None:
        err.edges[~mesh.edge_interior] = 0.0
    n = seminorms(mesh, err)
    return ErrorReport(
        h=mesh.h, h_gamma=mesh.h_gamma, scheme=scheme, L2_Omega=n.L2_Omega, L2_Gamma=n.L2_Gamma,
        Vh_Omega=n.Vh_Omega, Vh_Gamma=n.Vh_Gamma, Vh=n.Vh,
        n_dofs=mesh.n_cells + (len(mesh.interior_edges) if solved.edges is not None else 0),
        n_cells=mesh.n_cells,
        iterations=solve_report.iterations if solve_report else 0,
        residual=solve_report.residual if solve_report else 0.0, R=R)


def eoc_pair(e1: float, e2: float, h1: float, h2: float) -> float:
    return math.log(e1 / e2) / math.log(h1 / h2)


def eoc(reports, norm: str = "Vh") -> list[float | None]:
    """Rates between consecutive reports (ordered coarse to fine); first entry is None.

    Accepts :class:`ErrorReport` objects or ``(h, error)`` pairs.
    """
    pairs = []
    for r in reports:
        if isinstance(r, ErrorReport):
            pairs.append((r.h, r.value(norm)))
        else:
            pairs.append((float(r[0]), float(r[1])))
    out: list[float | None] = [None]
    for (h1, e1), (h2, e2) in zip(pairs, pairs[1:]):
        ok = all(v is not None and np.isfinite(v) and v > 0 for v in (e1, e2)) and h1 != h2
        out.append(eoc_pair(e1, e2, h1, h2) if ok else None)
    return out
