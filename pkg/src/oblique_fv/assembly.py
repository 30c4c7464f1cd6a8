"""Global systems for the centred, upwind and splitting schemes, and their solvers.

Assembly works on an extended column space ``[point values | edge values]``.
Columns of cell points and interior Gamma edges become unknowns; columns of
Dirichlet points and rim edges are data and move to the right-hand side.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .cases import Case
from .fields import DiscreteField
from .fluxes import (face_brackets, face_integrals, hmm_matrices,
                     inner_flux_matrix, inner_flux_values, splitting_flux_matrix)
from .mesh import Mesh

SCHEMES = ("central", "upwind", "splitting")
DENSE_LIMIT = 5000


class SolverError(RuntimeError):
    """Iterative solve did not produce a solution."""

    def __init__(self, message: str, iterations: int = 0, residual: float = float("nan")):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class MaxIterError(SolverError):
    pass


class BreakdownError(SolverError):
    pass


class SingularMatrixError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class DofMap:
    n_cells: int
    edge_ids: np.ndarray  # interior Gamma edges carrying an unknown, in DOF order

    @property
    def n_edge_dofs(self) -> int:
        return len(self.edge_ids)

    @property
    def n_dofs(self) -> int:
        return self.n_cells + len(self.edge_ids)

    def cell_dof(self, cell: int) -> int:
        return int(cell)

    def edge_dof(self, edge: int) -> int:
        hit = np.nonzero(self.edge_ids == edge)[0]
        if len(hit) == 0:
            raise KeyError(f"edge {edge} carries no unknown")
        return self.n_cells + int(hit[0])

    def to_vector(self, f: DiscreteField) -> np.ndarray:
        if self.n_edge_dofs == 0:
            return np.asarray(f.cells, float).copy()
        return np.concatenate([f.cells, np.asarray(f.edges)[self.edge_ids]])

    def to_field(self, x: np.ndarray, data: DiscreteField) -> DiscreteField:
        """Field with unknowns from ``x`` and boundary data copied from ``data``."""
        cells = np.asarray(x[: self.n_cells], float).copy()
        edges = None
        if self.n_edge_dofs:
            edges = np.array(data.edges, dtype=float, copy=True)
            edges[self.edge_ids] = x[self.n_cells:]
        return DiscreteField(cells, edges, np.array(data.point_data, dtype=float, copy=True))


@dataclass
class LinearSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    dofmap: DofMap
    scheme: str
    data: DiscreteField  # boundary data used when folding known columns
    params: dict = field(default_factory=dict)

    @property
    def n_dofs(self) -> int:
        return self.dofmap.n_dofs

    def residual(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x - self.rhs

    def to_coordinate_text(self) -> str:
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return "".join(f"{r} {c} {v:.17g}\n"
                       for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]))


@dataclass
class SolveReport:
    iterations: int
    residual: float
    converged: bool
    history: list = field(default_factory=list)

    def log_csv(self) -> str:
        return "iteration,residual\n" + "".join(f"{i},{r:.17g}\n" for i, r in self.history)


# ------------------------------------------------------------------- helpers

def boundary_data(mesh: Mesh, case: Case, with_edges: bool) -> DiscreteField:
    """Dirichlet point data and rim-edge data (2-point Gauss edge averages) of ``case``."""
    pdata = np.zeros(mesh.n_points)
    dp = mesh.dirichlet_points
    pdata[dp] = case.dirichlet(mesh.points[dp])
    edges = None
    if with_edges:
        edges = np.zeros(mesh.n_edges)
        rim = ~mesh.edge_interior
        edges[rim] = case.dirichlet(mesh.edge_gauss[rim]).mean(axis=1)
    return DiscreteField(np.zeros(mesh.n_cells), edges, pdata)


def default_R(mesh: Mesh, case: Case) -> float:
    """``max(1, |W|_inf)`` sampled at Gamma-edge quadrature points."""
    w = np.linalg.norm(case.W(mesh.edge_gauss), axis=-1)
    return float(max(1.0, w.max()))


def balance_incidence(mesh: Mesh) -> sp.csr_matrix:
    """``(n_cells, n_faces)``: +1 for the p cell, -1 for the q cell of each face."""
    inner = ~mesh.face_dirichlet
    rows = np.concatenate([mesh.face_p, mesh.face_q[inner]])
    cols = np.concatenate([np.arange(mesh.n_faces), np.nonzero(inner)[0]])
    vals = np.concatenate([np.ones(mesh.n_faces), -np.ones(int(inner.sum()))])
    return sp.csr_matrix((vals, (rows, cols)), shape=(mesh.n_cells, mesh.n_faces))


def _fold(mesh: Mesh, ext: sp.csr_matrix, rhs: np.ndarray, data: DiscreteField,
          edge_ids: np.ndarray) -> tuple[sp.csr_matrix, np.ndarray]:
    """Split extended columns ``[points | edges]`` into unknowns and folded data."""
    npts = mesh.n_points
    n_edges = ext.shape[1] - npts
    known = np.zeros(ext.shape[1])
    known[:npts] = data.point_data
    known[mesh.cell_pid] = 0.0
    col_map = np.full(ext.shape[1], -1, dtype=np.int64)
    col_map[mesh.cell_pid] = np.arange(mesh.n_cells)
    if n_edges:
        edata = np.asarray(data.edges, float).copy()
        edata[edge_ids] = 0.0
        known[npts:] = edata
        col_map[npts + edge_ids] = mesh.n_cells + np.arange(len(edge_ids))
    rhs = rhs - ext @ known
    ndof = mesh.n_cells + len(edge_ids)
    unknown_cols = np.nonzero(col_map >= 0)[0]
    sel = sp.csr_matrix((np.ones(len(unknown_cols)), (unknown_cols, col_map[unknown_cols])),
                        shape=(ext.shape[1], ndof))
    A = (ext @ sel).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A, rhs


def _inner_block(mesh: Mesh) -> sp.csr_matrix:
    return (balance_incidence(mesh) @ inner_flux_matrix(mesh)).tocsr()


# ------------------------------------------------------------------ assembly

def assemble_central(mesh: Mesh, case: Case, R: float | None = None) -> LinearSystem:
    """Centred scheme with edge unknowns and ``R h_Gamma`` HMM stabilization."""
    if R is None:
        R = default_R(mesh, case)
    if not R > 0:
        raise ValueError(f"R must be positive, got {R}")
    nc, npts, ne = mesh.n_cells, mesh.n_points, mesh.n_edges
    edge_ids = mesh.interior_edges
    n_rows = nc + len(edge_ids)
    stab = R * mesh.h_gamma
    M, _ = hmm_matrices(mesh)
    b = face_brackets(mesh, case.W)  # (ng, 4)
    div = b.sum(axis=1)
    gcell = mesh.gface_cell
    gpid = mesh.cell_pid[gcell]
    ecol = npts + mesh.gface_edges  # (ng, 4) extended edge columns

    rows, cols, vals = [], [], []
    # cell rows on Gamma: T_e b - T_p [div W] + R h sum_e F_e
    rows += [np.repeat(gcell, 4), gcell, gcell]
    cols += [ecol.ravel(), gpid, gpid]
    vals += [b.ravel(), -div, stab * M.sum(axis=(1, 2))]
    rows.append(np.repeat(gcell, 4))
    cols.append(ecol.ravel())
    vals.append(-stab * M.sum(axis=1).ravel())  # coefficient of T_e' is -sum_e M[e, e']

    # edge rows: -T_e (b_sigma + b_tau) - R h (F_sigma,e + F_tau,e) = 0
    edge_row = np.full(ne, -1, dtype=np.int64)
    edge_row[edge_ids] = nc + np.arange(len(edge_ids))
    er = edge_row[mesh.gface_edges]  # (ng, 4)
    has = er >= 0
    g_idx, l_idx = np.nonzero(has)
    r = er[g_idx, l_idx]
    rows += [r, r]
    cols += [ecol[g_idx, l_idx], gpid[g_idx]]
    vals += [-b[g_idx, l_idx], -stab * M[g_idx, l_idx, :].sum(axis=1)]
    rows.append(np.repeat(r, 4))
    cols.append(ecol[g_idx].ravel())
    vals.append(stab * M[g_idx, l_idx, :].ravel())

    gamma = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n_rows, npts + ne))
    inner = sp.vstack([_inner_block(mesh), sp.csr_matrix((len(edge_ids), npts))])
    ext = sp.hstack([inner, sp.csr_matrix((n_rows, ne))]).tocsr() + gamma
    rhs = np.zeros(n_rows)
    rhs[gcell] = face_integrals(mesh, case.g)
    data = boundary_data(mesh, case, with_edges=True)
    A, rhs = _fold(mesh, ext, rhs, data, edge_ids)
    return LinearSystem(A, rhs, DofMap(nc, edge_ids), "central", data,
                        {"R": float(R), "h_gamma": mesh.h_gamma})


def assemble_upwind(mesh: Mesh, case: Case) -> LinearSystem:
    """Upwind boundary advection, cell unknowns only, no surface diffusion."""
    nc, npts, ne = mesh.n_cells, mesh.n_points, mesh.n_edges
    b = face_brackets(mesh, case.W)
    div = b.sum(axis=1)
    gcell = mesh.gface_cell
    gpid = mesh.cell_pid[gcell]
    g_idx, l_idx = np.nonzero(np.ones_like(b, dtype=bool))
    bb = b[g_idx, l_idx]
    edges = mesh.gface_edges[g_idx, l_idx]
    owners = mesh.edge_faces[edges]
    tau = np.where(owners[:, 0] == g_idx, owners[:, 1], owners[:, 0])
    up_col = np.where(tau >= 0, mesh.cell_pid[mesh.gface_cell[np.maximum(tau, 0)]], npts + edges)
    col = np.where(bb >= 0, gpid[g_idx], up_col)
    rows = np.concatenate([gcell[g_idx], gcell])
    cols = np.concatenate([col, gpid])
    vals = np.concatenate([bb, -div])
    gamma = sp.csr_matrix((vals, (rows, cols)), shape=(nc, npts + ne))
    ext = sp.hstack([_inner_block(mesh), sp.csr_matrix((nc, ne))]).tocsr() + gamma
    rhs = np.zeros(nc)
    rhs[gcell] = face_integrals(mesh, case.g)
    data = boundary_data(mesh, case, with_edges=True)
    A, rhs = _fold(mesh, ext, rhs, data, np.zeros(0, dtype=np.int64))
    data = DiscreteField(data.cells, None, data.point_data)
    return LinearSystem(A, rhs, DofMap(nc, np.zeros(0, dtype=np.int64)), "upwind", data,
                        {"h_gamma": mesh.h_gamma})


def assemble_splitting(mesh: Mesh, case: Case) -> LinearSystem:
    """Normal flux on Gamma rebuilt from the oblique datum and tangential differences."""
    nc = mesh.n_cells
    S, const = splitting_flux_matrix(mesh, case.V_normalized, case.g)
    G = sp.csr_matrix((np.ones(mesh.n_gamma), (mesh.gface_cell, np.arange(mesh.n_gamma))),
                      shape=(nc, mesh.n_gamma))
    ext = (_inner_block(mesh) + G @ S).tocsr()
    rhs = -(G @ const)
    data = boundary_data(mesh, case, with_edges=False)
    A, rhs = _fold(mesh, ext, rhs, data, np.zeros(0, dtype=np.int64))
    return LinearSystem(A, rhs, DofMap(nc, np.zeros(0, dtype=np.int64)), "splitting", data,
                        {"h_gamma": mesh.h_gamma})


def assemble(mesh: Mesh, case: Case, scheme: str, R: float | None = None) -> LinearSystem:
    if scheme == "central":
        return assemble_central(mesh, case, R)
    if scheme == "upwind":
        return assemble_upwind(mesh, case)
    if scheme == "splitting":
        return assemble_splitting(mesh, case)
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


# ------------------------------------------------------------------- solvers

def solve(system: LinearSystem, tol: float = 1e-10, max_iter: int | None = None,
          log: bool = False, x0: np.ndarray | None = None) -> tuple[DiscreteField, SolveReport]:
    """BiCGStab with Jacobi preconditioning.

    Raises :class:`MaxIterError` when the iteration budget runs out and
    :class:`BreakdownError` on breakdown or non-finite iterates.
    """
    A, b = system.matrix, system.rhs
    n = A.shape[0]
    if max_iter is None:
        max_iter = 20 * n
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return system.dofmap.to_field(np.zeros(n), system.data), SolveReport(0, 0.0, True)
    diag = A.diagonal()
    if np.any(diag == 0):
        raise BreakdownError("zero diagonal entry; Jacobi preconditioner undefined")
    inv = 1.0 / diag
    M = spla.LinearOperator((n, n), matvec=lambda v: inv * v, dtype=float)
    history: list = []
    count = [0]

    def callback(xk):
        count[0] += 1
        if log:
            history.append((count[0], float(np.linalg.norm(b - A @ xk)) / bnorm))

    x, info = spla.bicgstab(A, b, x0=x0, rtol=tol, atol=0.0, maxiter=max_iter, M=M,
                            callback=callback)
    finite = bool(np.all(np.isfinite(x)))
    res = float(np.linalg.norm(b - A @ x)) / bnorm if finite else float("nan")
    if info < 0 or not finite:
        raise BreakdownError(f"BiCGStab breakdown after {count[0]} iterations", count[0], res)
    if info > 0 or not res <= 10 * tol:
        raise MaxIterError(f"BiCGStab did not converge in {count[0]} iterations "
                           f"(relative residual {res:.3e})", count[0], res)
    return system.dofmap.to_field(x, system.data), SolveReport(count[0], res, True, history)


def solve_dense_oracle(system: LinearSystem) -> DiscreteField:
    """Pivoted dense LU; verification only."""
    n = system.n_dofs
    if n > DENSE_LIMIT:
        raise ValueError(f"dense oracle limited to {DENSE_LIMIT} unknowns, got {n}")
    return system.dofmap.to_field(dense_solve(system.matrix.toarray(), system.rhs), system.data)


def dense_solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, float))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)  # reported below instead
        lu, piv = sla.lu_factor(A, check_finite=True)
    d = np.abs(np.diag(lu))
    scale = max(np.abs(A).max(), np.finfo(float).tiny)
    if d.min() <= A.shape[0] * np.finfo(float).eps * scale:
        raise SingularMatrixError("matrix is singular to working precision")
    return sla.lu_solve((lu, piv), np.asarray(b, float))


# --------------------------------------------------------------- bilinear form

def bilinear_probe(mesh: Mesh, case: Case, R: float, phi: DiscreteField,
                   psi: DiscreteField) -> float:
    """Centred-scheme bilinear form ``a_h(phi, psi)`` gathered by faces and edges.

    ``phi`` may carry boundary data; ``psi`` is taken in the homogeneous
    space (its Dirichlet and rim-edge values are ignored).
    """
    pv = phi.point_values(mesh)
    F = inner_flux_values(mesh, pv)
    psi_c = np.asarray(psi.cells, float)
    psi_q = np.where(mesh.face_dirichlet, 0.0, psi_c[np.maximum(mesh.face_q, 0)])
    total = float(np.sum(F * (psi_c[mesh.face_p] - psi_q)))

    M, _ = hmm_matrices(mesh)
    b = face_brackets(mesh, case.W)
    div = b.sum(axis=1)
    gc = mesh.gface_cell
    phi_e = np.asarray(phi.edges, float)[mesh.gface_edges]
    psi_e = np.where(mesh.edge_interior, np.asarray(psi.edges, float), 0.0)[mesh.gface_edges]
    phi_p = np.asarray(phi.cells, float)[gc]
    psi_p = psi_c[gc]
    hmm = np.einsum("gef,gf->ge", M, phi_p[:, None] - phi_e)
    diff = psi_p[:, None] - psi_e
    total += float(np.sum(phi_e * b * diff))
    total -= float(np.sum(div * phi_p * psi_p))
    total += R * mesh.h_gamma * float(np.sum(hmm * diff))
    return total


def linear_form(mesh: Mesh, case: Case, psi: DiscreteField) -> float:
    return float(np.sum(face_integrals(mesh, case.g) * np.asarray(psi.cells)[mesh.gface_cell]))
