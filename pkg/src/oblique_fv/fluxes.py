"""Numerical fluxes.

Inner fluxes and splitting boundary fluxes are linear in point values (cell
values at representative points, data at Dirichlet points); they are built
as sparse matrices over the point index space.  HMM surface fluxes act on a
Gamma face's cell value and its four edge values.

Sign convention: every flux approximates the outward flux ``-int grad T . n``
of the owning cell ``p``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh, MeshDegeneracyError, patch_quadrature

SPLITTING_BREAKDOWN_DET = 1e-10


class SplittingBreakdown(ArithmeticError):
    """Oblique direction too close to the tangent plane for the splitting flux."""

    def __init__(self, face: int, det: float):
        self.face = face
        self.det = det
        super().__init__(f"splitting breakdown on Gamma face {face}: |det| = {det:.3e}")


@dataclass
class LinearStencil:
    """Sparse linear functional ``sum(c * x[dof]) + constant``."""
    terms: dict[int, float] = field(default_factory=dict)
    constant: float = 0.0

    @classmethod
    def from_arrays(cls, dofs, coeffs, constant: float = 0.0) -> "LinearStencil":
        terms: dict[int, float] = {}
        for d, c in zip(np.asarray(dofs).tolist(), np.asarray(coeffs, float).tolist()):
            terms[d] = terms.get(d, 0.0) + c
        return cls(terms, float(constant))

    def __neg__(self) -> "LinearStencil":
        return LinearStencil({d: -c for d, c in self.terms.items()}, -self.constant)

    def __add__(self, other: "LinearStencil") -> "LinearStencil":
        terms = dict(self.terms)
        for d, c in other.terms.items():
            terms[d] = terms.get(d, 0.0) + c
        return LinearStencil(terms, self.constant + other.constant)

    def apply(self, x) -> float:
        x = np.asarray(x, float)
        return float(sum(c * x[d] for d, c in self.terms.items()) + self.constant)

    def items(self) -> list[tuple[int, float]]:
        return sorted(self.terms.items())

    def to_csv(self) -> str:
        lines = ["dof,coeff"]
        lines += [f"{d},{c:.17g}" for d, c in self.items()]
        lines.append(f"const,{self.constant:.17g}")
        return "\n".join(lines) + "\n"


# --------------------------------------------------------------------- inner

def _vertex_rows(mesh: Mesh, vids: np.ndarray, coeff: np.ndarray):
    """COO pieces spreading ``coeff`` (per face) over the eight stencil points of ``vids``."""
    cols = mesh.vertex_points[vids]  # (nf, 8)
    vals = np.repeat(coeff[:, None] / 8.0, 8, axis=1)
    return cols, vals


def _diagonal_flux_matrix(mesh: Mesh, rows_vertices: np.ndarray, rows_scale_c: np.ndarray,
                          rows_scale_s: np.ndarray, n_rows: int) -> tuple:
    """COO pieces of ``c (phi_oplus - phi_ominus) + s (phi_boxplus - phi_boxminus)``."""
    rows, cols, vals = [], [], []
    for slot, sign, scale in ((0, 1.0, rows_scale_c), (2, -1.0, rows_scale_c),
                              (1, 1.0, rows_scale_s), (3, -1.0, rows_scale_s)):
        c, v = _vertex_rows(mesh, rows_vertices[:, slot], sign * scale)
        rows.append(np.repeat(np.arange(n_rows), 8))
        cols.append(c.ravel())
        vals.append(v.ravel())
    return rows, cols, vals


def inner_flux_matrix(mesh: Mesh) -> sp.csr_matrix:
    """Sparse ``(n_faces, n_points)`` operator giving ``F_{p,sigma}`` from point values.

    ``F = |s| ((phi_p - phi_q)/(beta d) + (alpha_c/beta)(phi_oplus - phi_ominus)/d_c
    + (alpha_s/beta)(phi_boxplus - phi_boxminus)/d_s)``.
    """
    nf = mesh.n_faces
    two_point = mesh.face_area / (mesh.face_beta * mesh.face_d)
    cc = mesh.face_area * mesh.face_alpha_c / (mesh.face_beta * mesh.face_dc)
    cs = mesh.face_area * mesh.face_alpha_s / (mesh.face_beta * mesh.face_ds)
    rows, cols, vals = _diagonal_flux_matrix(mesh, mesh.face_vertices, cc, cs, nf)
    rows += [np.arange(nf), np.arange(nf)]
    cols += [mesh.cell_pid[mesh.face_p], mesh.face_q_point]
    vals += [two_point, -two_point]
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(nf, mesh.n_points))


def vertex_values(mesh: Mesh, point_values: np.ndarray) -> np.ndarray:
    return point_values[mesh.vertex_points].mean(axis=1)


def inner_flux_values(mesh: Mesh, point_values: np.ndarray) -> np.ndarray:
    """Direct evaluation of every inner flux (used to cross-check the sparse form)."""
    phi = np.asarray(point_values, float)
    pv = vertex_values(mesh, phi)[mesh.face_vertices]
    jump = phi[mesh.cell_pid[mesh.face_p]] - phi[mesh.face_q_point]
    return mesh.face_area / mesh.face_beta * (
        jump / mesh.face_d
        + mesh.face_alpha_c * (pv[:, 0] - pv[:, 2]) / mesh.face_dc
        + mesh.face_alpha_s * (pv[:, 1] - pv[:, 3]) / mesh.face_ds)


def _point_stencil(mesh: Mesh, cols, vals, point_data, sign: float) -> LinearStencil:
    """Turn point-space coefficients into a cell-DOF stencil with folded data."""
    cols = np.asarray(cols)
    vals = sign * np.asarray(vals, float)
    cells = mesh.point_cell[cols]
    known = cells < 0
    data = np.zeros(mesh.n_points) if point_data is None else np.asarray(point_data, float)
    const = float(np.dot(vals[known], data[cols[known]]))
    return LinearStencil.from_arrays(cells[~known], vals[~known], const)


def inner_flux_stencil(mesh: Mesh, face: int, side: str = "p", point_data=None,
                       matrix: sp.csr_matrix | None = None) -> LinearStencil:
    """Stencil of the inner flux through ``face`` seen from ``side`` ('p' or 'q').

    Cell DOF ids equal cell ids.  Dirichlet data (``point_data`` indexed by
    point id, zero when omitted) folds into the constant.
    """
    if side not in ("p", "q"):
        raise ValueError("side must be 'p' or 'q'")
    if side == "q" and mesh.face_q[face] < 0:
        raise ValueError(f"face {face} is a Dirichlet face and has no q cell")
    F = inner_flux_matrix(mesh) if matrix is None else matrix
    row = F.getrow(face)
    return _point_stencil(mesh, row.indices, row.data, point_data, 1.0 if side == "p" else -1.0)


# ----------------------------------------------------------------------- HMM

@dataclass(frozen=True)
class HmmLocalOperator:
    """``F_e = sum_e' A[e, e'] (phi_p - phi_e')`` on one Gamma face."""
    face: int
    edges: np.ndarray
    A: np.ndarray
    grad_rows: np.ndarray  # (3, 4): grad = grad_rows @ (phi_e - phi_p)

    def fluxes(self, phi_p: float, phi_e) -> np.ndarray:
        return self.A @ (phi_p - np.asarray(phi_e, float))

    def gradient(self, phi_p: float, phi_e) -> np.ndarray:
        return self.grad_rows @ (np.asarray(phi_e, float) - phi_p)


def hmm_matrices(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """HMM matrices of all Gamma faces, shape (n_gamma, 4, 4), and gradient rows (n_gamma, 3, 4).

    The gradient uses differences ``phi_e - phi_p``, so constants are
    flux-free even when the discrete face is not closed in the plane.
    """
    cn = mesh.gface_conormal()
    length = mesh.edge_length[mesh.gface_edges]
    area = mesh.gface_area
    N = cn * length[..., None]  # (ng, 4, 3)
    X = mesh.edge_mid[mesh.gface_edges] - mesh.gface_points[:, None, :]
    grad_rows = np.transpose(N, (0, 2, 1)) / area[:, None, None]
    P = np.eye(4)[None] - np.einsum("gei,gif->gef", X, grad_rows)
    D = length / mesh.gface_dperp
    A = (np.einsum("gei,gfi->gef", N, N) / area[:, None, None]
         + np.einsum("gke,gk,gkf->gef", P, D, P))
    return A, grad_rows


def hmm_local_operator(mesh: Mesh, sigma: int) -> HmmLocalOperator:
    if mesh.gface_dperp[sigma].min() < 1e-14:
        raise MeshDegeneracyError(f"Gamma face {sigma}: representative point on an edge line")
    A, G = hmm_matrices(mesh)
    return HmmLocalOperator(face=sigma, edges=mesh.gface_edges[sigma].copy(), A=A[sigma],
                            grad_rows=G[sigma])


# ----------------------------------------------------------------- advection

def edge_brackets(mesh: Mesh, W) -> np.ndarray:
    """``int_e W . n`` for every Gamma edge in its canonical orientation (2-point Gauss)."""
    w = W(mesh.edge_gauss)  # (ne, 2, 3)
    return mesh.edge_length * 0.5 * np.einsum("eqi,ei->e", w, mesh.edge_conormal)


def face_brackets(mesh: Mesh, W=None, brackets: np.ndarray | None = None) -> np.ndarray:
    """Brackets seen from each Gamma face, shape (n_gamma, 4); antisymmetric across edges."""
    b = edge_brackets(mesh, W) if brackets is None else brackets
    return b[mesh.gface_edges] * mesh.gface_edge_sign


def advective_bracket(mesh: Mesh, sigma: int, e: int, W) -> float:
    """``[W . n]_{sigma,e}`` for local edge ``e`` (0..3) of Gamma face ``sigma``."""
    gid = mesh.gface_edges[sigma, e]
    pts = mesh.edge_gauss[gid]
    n = mesh.edge_conormal[gid] * mesh.gface_edge_sign[sigma, e]
    return float(mesh.edge_length[gid] * 0.5 * np.sum(W(pts) @ n))


def surface_div_bracket(mesh: Mesh, sigma: int, W) -> float:
    return float(sum(advective_bracket(mesh, sigma, e, W) for e in range(4)))


def upwind_boundary_stencil(mesh: Mesh, sigma: int, e: int, W, edge_data=None) -> LinearStencil:
    """Upwind advective flux on one edge; ties go to the own cell.

    On the rim of Gamma the downwind neighbour is the edge datum
    ``edge_data[edge id]`` (zero when omitted) and folds into the constant.
    """
    b = advective_bracket(mesh, sigma, e, W)
    p = int(mesh.gface_cell[sigma])
    if b >= 0:
        return LinearStencil({p: b})
    gid = mesh.gface_edges[sigma, e]
    other = mesh.edge_faces[gid]
    tau = other[1] if other[0] == sigma else other[0]
    if tau < 0:
        datum = 0.0 if edge_data is None else float(edge_data[gid])
        return LinearStencil({}, b * datum)
    return LinearStencil({int(mesh.gface_cell[tau]): b})


# ----------------------------------------------------------------- splitting

def splitting_coefficients(mesh: Mesh, V) -> np.ndarray:
    """Decomposition ``ntilde/|s| = a0 V(x_p) + a1 t_c + a2 t_s`` on every Gamma face.

    ``V`` is the normalized oblique field (``V . n = 1``).  Raises
    :class:`SplittingBreakdown` when the unit oblique direction is nearly
    coplanar with the face diagonals.
    """
    v = mesh.vertices[mesh.gface_vertices]
    tc = v[:, 0] - v[:, 2]
    ts = v[:, 1] - v[:, 3]
    tc /= np.linalg.norm(tc, axis=1)[:, None]
    ts /= np.linalg.norm(ts, axis=1)[:, None]
    s = np.asarray(V(mesh.gface_points), float)
    shat = s / np.linalg.norm(s, axis=1)[:, None]
    det = np.einsum("gi,gi->g", shat, np.cross(tc, ts))
    bad = np.abs(det) < SPLITTING_BREAKDOWN_DET
    if np.any(bad):
        f = int(np.nonzero(bad)[0][0])
        raise SplittingBreakdown(f, float(abs(det[f])))
    basis = np.stack([s, tc, ts], axis=2)
    rhs = mesh.gface_ntilde / mesh.gface_area[:, None]
    return np.linalg.solve(basis, rhs[..., None])[..., 0]


def face_integrals(mesh: Mesh, g) -> np.ndarray:
    """``int_sigma g`` on every Gamma face (2x2 Gauss on the bilinear patch)."""
    pts, wts = patch_quadrature(mesh.vertices[mesh.gface_vertices])
    return np.sum(g(pts) * wts, axis=1)


def splitting_flux_matrix(mesh: Mesh, V, g) -> tuple[sp.csr_matrix, np.ndarray]:
    """Splitting fluxes on Gamma as ``S @ point_values + c`` (rows are Gamma faces)."""
    a = splitting_coefficients(mesh, V)
    v = mesh.vertices[mesh.gface_vertices]
    dc = np.linalg.norm(v[:, 0] - v[:, 2], axis=1)
    ds = np.linalg.norm(v[:, 1] - v[:, 3], axis=1)
    area = mesh.gface_area
    rows, cols, vals = _diagonal_flux_matrix(mesh, mesh.gface_vertices, -area * a[:, 1] / dc,
                                             -area * a[:, 2] / ds, mesh.n_gamma)
    S = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(mesh.n_gamma, mesh.n_points))
    return S, -a[:, 0] * face_integrals(mesh, g)


def splitting_boundary_stencil(mesh: Mesh, sigma: int, V, g, point_data=None) -> LinearStencil:
    """Normal flux on Gamma face ``sigma`` rebuilt from the oblique datum ``g``.

    Represents ``-int_sigma grad T . n``; the datum part sits in the constant.
    """
    S, c = splitting_flux_matrix(mesh, V, g)
    row = S.getrow(sigma)
    st = _point_stencil(mesh, row.indices, row.data, point_data, 1.0)
    st.constant += float(c[sigma])
    return st
