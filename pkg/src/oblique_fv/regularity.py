"""Mesh regularity factors.

``reg_mesh``, ``reg_mesh_omega`` and ``reg_mesh_gamma`` are upper-bound
quantities; ``varrho_mesh_omega`` is the coercivity factor of the inner
fluxes and may be negative on strongly distorted meshes.

The coercivity factor is accumulated by a traversal: every interior face
``pq`` spreads its cross-diffusion weight over the faces that appear when
the vertex differences are rewritten as sums of neighbour differences.
:func:`varrho_face_by_definition` recomputes one face from the set
definitions with an adjacency search, as an independent check.

Vertex labels are normalized so that both alphas are non-negative; this
only changes signs, so ``|alpha|`` is used throughout.  Flux assembly keeps
the stored orientation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mesh import CORNER_OFFSETS, VERTEX_DIRICHLET, VERTEX_GAMMA, VERTEX_INTERIOR, Mesh

ZETA = {VERTEX_INTERIOR: (1.0, 3.0), VERTEX_GAMMA: (0.0, 4.0), VERTEX_DIRICHLET: (0.0, 8.0)}


@dataclass(frozen=True)
class Offender:
    face: int
    value: float


@dataclass
class RegularityReport:
    h: float
    reg_mesh: float
    reg_mesh_omega: float
    reg_mesh_gamma: float
    varrho_mesh_omega: float
    worst: dict[str, Offender] = field(default_factory=dict)

    def row(self) -> dict[str, float]:
        return {"h": self.h, "reg_mesh": self.reg_mesh, "reg_mesh_omega": self.reg_mesh_omega,
                "reg_mesh_gamma": self.reg_mesh_gamma, "varrho": self.varrho_mesh_omega}


def _face_lookup(mesh: Mesh) -> np.ndarray:
    """``out[cell, axis, side>0]`` is the non-Gamma face of ``cell`` on that side."""
    out = np.full((mesh.n_cells, 3, 2), -1, dtype=np.int64)
    f = np.arange(mesh.n_faces)
    side = (mesh.face_side > 0).astype(np.int64)
    out[mesh.face_p, mesh.face_axis, side] = f
    inner = mesh.face_q >= 0
    out[mesh.face_q[inner], mesh.face_axis[inner], 1 - side[inner]] = f[inner]
    return out


# ------------------------------------------------------------------ reg_M
def _reg_mesh_terms(mesh: Mesh):
    unit = mesh.face_ntilde / np.linalg.norm(mesh.face_ntilde, axis=1)[:, None]
    inner = np.nonzero(mesh.face_q >= 0)[0]
    xq = mesh.cell_points[mesh.face_q[inner]]
    dq = np.abs(np.einsum("ij,ij->i", xq - mesh.face_centroid[inner], unit[inner]))
    ratio_p = mesh.cell_diam[mesh.face_p] / mesh.face_dperp
    ratio_q = np.full(mesh.n_faces, -np.inf)
    ratio_q[inner] = mesh.cell_diam[mesh.face_q[inner]] / dq
    first = np.maximum(ratio_p, ratio_q)
    dp, dq_ = mesh.cell_diam[mesh.face_p[inner]], mesh.cell_diam[mesh.face_q[inner]]
    second = np.full(mesh.n_faces, -np.inf)
    second[inner] = np.maximum(dp / dq_, dq_ / dp)
    return first, second


def reg_mesh(mesh: Mesh) -> float:
    first, second = _reg_mesh_terms(mesh)
    return float(first.max() + second.max())


# ------------------------------------------------------------ reg_{M,Omega}
def vertex_distance_norms(mesh: Mesh) -> np.ndarray:
    """Euclidean norm of the distances from each vertex to its distinct stencil points."""
    ids = np.sort(mesh.vertex_points, axis=1)
    keep = np.ones_like(ids, dtype=bool)
    keep[:, 1:] = ids[:, 1:] != ids[:, :-1]
    dist = np.linalg.norm(mesh.points[ids] - mesh.vertices[:, None, :], axis=2)
    return np.sqrt(np.sum(np.where(keep, dist**2, 0.0), axis=1))


def _reg_omega_terms(mesh: Mesh):
    vn = vertex_distance_norms(mesh)[mesh.face_vertices]
    diag = np.stack([mesh.face_dc, mesh.face_ds, mesh.face_dc, mesh.face_ds], axis=1)
    return (vn / diag).max(axis=1), 1.0 / np.abs(mesh.face_det)


def reg_mesh_omega(mesh: Mesh) -> float:
    first, second = _reg_omega_terms(mesh)
    return float(first.max() + second.max())


# ------------------------------------------------------------ reg_{M,Gamma}
def _reg_gamma_terms(mesh: Mesh):
    first = (mesh.gface_diam[:, None] / mesh.gface_dperp).max(axis=1)
    e = mesh.interior_edges
    a, b = mesh.gface_diam[mesh.edge_faces[e, 0]], mesh.gface_diam[mesh.edge_faces[e, 1]]
    ratio = np.maximum(a / b, b / a)
    second = np.full(mesh.n_gamma, -np.inf)
    np.maximum.at(second, mesh.edge_faces[e, 0], ratio)
    np.maximum.at(second, mesh.edge_faces[e, 1], ratio)
    return first, second


def reg_mesh_gamma(mesh: Mesh) -> float:
    first, second = _reg_gamma_terms(mesh)
    return float(first.max() + second.max())


# ---------------------------------------------------------- varrho_{M,Omega}
def _cross_weights(mesh: Mesh) -> np.ndarray:
    """|sigma| |alpha| / (beta d) per face and vertex slot (slots 0, 2 use the circle diagonal)."""
    wc = mesh.face_area * np.abs(mesh.face_alpha_c) / (mesh.face_beta * mesh.face_dc)
    ws = mesh.face_area * np.abs(mesh.face_alpha_s) / (mesh.face_beta * mesh.face_ds)
    return np.stack([wc, ws, wc, ws], axis=1)


def _base_term(mesh: Mesh, weights: np.ndarray) -> np.ndarray:
    eps = np.where(mesh.face_dirichlet, 0.0, 1.0)
    ac, as_ = np.abs(mesh.face_alpha_c), np.abs(mesh.face_alpha_s)
    b, d = mesh.face_beta, mesh.face_d
    return (1.0 / b - eps * ac * d / (2 * weights * b * mesh.face_dc)
            - eps * as_ * d / (2 * weights * b * mesh.face_ds))


def coercivity_deposits(mesh: Mesh, weights: np.ndarray | None = None) -> np.ndarray:
    """Sum of zeta-weighted cross terms received by every non-Gamma face."""
    w = np.ones(mesh.n_faces) if weights is None else np.asarray(weights, float)
    lookup = _face_lookup(mesh)
    cross = _cross_weights(mesh) * w[:, None]
    upper = np.array(mesh.grid.shape) - 1
    inner = np.nonzero(mesh.face_q >= 0)[0]
    ax = mesh.face_axis[inner]
    tang = np.stack([(ax + 1) % 3, (ax + 2) % 3], axis=1)
    rows = np.arange(len(inner))
    dep = np.zeros(mesh.n_faces)

    def face_of(cells, axis, m):
        return lookup[cells, axis, (m > 0).astype(np.int64)]

    for slot in range(4):
        vid = mesh.face_vertices[inner, slot]
        kind = mesh.vertex_kind[vid]
        wt = cross[inner, slot]
        for r in (mesh.face_p[inner], mesh.face_q[inner]):
            corner = np.argmax(mesh.cell_vertices[r] == vid[:, None], axis=1)
            m = CORNER_OFFSETS[corner]
            rijk = mesh.cell_ijk[r]
            b, c = tang[:, 0], tang[:, 1]
            mb, mc = m[rows, b], m[rows, c]

            sel = kind == VERTEX_INTERIOR
            if sel.any():
                s = np.nonzero(sel)[0]
                step_b = np.zeros((len(s), 3), dtype=np.int64)
                step_c = np.zeros((len(s), 3), dtype=np.int64)
                step_b[np.arange(len(s)), b[s]] = mb[s]
                step_c[np.arange(len(s)), c[s]] = mc[s]
                f1 = mesh.cell_index[tuple((rijk[s] + step_b).T)]
                f2 = mesh.cell_index[tuple((rijk[s] + step_c).T)]
                zx, zy = ZETA[VERTEX_INTERIOR]
                np.add.at(dep, face_of(f1, c[s], mc[s]), zx * wt[s])  # {e, f1}
                np.add.at(dep, face_of(f2, b[s], mb[s]), zx * wt[s])  # {e, f2}
                np.add.at(dep, face_of(r[s], b[s], mb[s]), zy * wt[s])  # {r, f1}
                np.add.at(dep, face_of(r[s], c[s], mc[s]), zy * wt[s])  # {r, f2}

            sel = kind == VERTEX_GAMMA
            if sel.any():
                s = np.nonzero(sel)[0]
                horiz = np.where(b[s] == 2, c[s], b[s])
                mh = m[s, horiz]
                np.add.at(dep, face_of(r[s], horiz, mh), ZETA[VERTEX_GAMMA][1] * wt[s])

            sel = kind == VERTEX_DIRICHLET
            if sel.any():
                s = np.nonzero(sel)[0]
                chosen = np.full(len(s), -1)
                for col in (0, 1):
                    t = tang[s, col]
                    nb = rijk[s, t] + m[s, t]
                    ext = (nb == upper[t]) | ((nb == 0) & (t < 2))
                    # first extremal axis in ascending axis order
                    better = ext & ((chosen < 0) | (t < chosen))
                    chosen = np.where(better, t, chosen)
                if np.any(chosen < 0):
                    raise AssertionError("Dirichlet vertex without a Dirichlet face on its cell")
                mt = m[s, chosen]
                np.add.at(dep, face_of(r[s], chosen, mt), ZETA[VERTEX_DIRICHLET][1] * wt[s])
    return dep


def varrho_faces(mesh: Mesh, weights: np.ndarray | None = None) -> np.ndarray:
    """Per-face bracketed expression of the coercivity factor (all non-Gamma faces)."""
    w = np.ones(mesh.n_faces) if weights is None else np.asarray(weights, float)
    if np.any(w <= 0):
        raise ValueError("coercivity weights must be positive")
    dep = coercivity_deposits(mesh, w)
    return _base_term(mesh, w) - mesh.face_d / mesh.face_area * dep / 16.0


def varrho_mesh_omega(mesh: Mesh, weights: np.ndarray | None = None) -> float:
    """Coercivity factor; ``weights`` gives the generalized Young splitting per face.

    Each face keeps its own bracket and the factor is the smallest bracket,
    with or without weights.
    """
    return float(varrho_faces(mesh, weights).min())


def varrho_face_by_definition(mesh: Mesh, ab: int) -> float:
    """Recompute one face bracket by enumerating the X and Y triplet sets directly.

    Uses cell adjacency and shared vertices only (no index arithmetic).
    Slow; meant for checks on small meshes.
    """
    nbrs: list[set] = [set() for _ in range(mesh.n_cells)]
    dfaces: list[list[int]] = [[] for _ in range(mesh.n_cells)]
    for f in range(mesh.n_faces):
        p, q = int(mesh.face_p[f]), int(mesh.face_q[f])
        if q >= 0:
            nbrs[p].add(q)
            nbrs[q].add(p)
        else:
            dfaces[p].append(f)
    cverts = [set(row.tolist()) for row in mesh.cell_vertices]
    on_dir = set(mesh.face_vertices[mesh.face_dirichlet].ravel().tolist())
    on_gamma = set(mesh.gface_vertices.ravel().tolist())

    def ends(f):
        q = int(mesh.face_q[f])
        return frozenset({("c", int(mesh.face_p[f])), ("c", q) if q >= 0 else ("d", f)})

    target = ends(ab)
    cross = _cross_weights(mesh)
    sx = sy = 0.0
    for f in np.nonzero(mesh.face_q >= 0)[0]:
        p, q = int(mesh.face_p[f]), int(mesh.face_q[f])
        for slot, v in enumerate(mesh.face_vertices[f].tolist()):
            kind = (VERTEX_DIRICHLET if v in on_dir
                    else VERTEX_GAMMA if v in on_gamma else VERTEX_INTERIOR)
            zx, zy = ZETA[kind]
            in_x = in_y = False
            for r in (p, q):
                if kind == VERTEX_DIRICHLET:
                    cands = [g for g in dfaces[r] if v in set(mesh.face_vertices[g].tolist())]
                    g = min(cands, key=lambda g: mesh.face_axis[g])
                    fam = [("d", g)]
                    e = None
                else:
                    fam = [("c", c) for c in nbrs[r] if v in cverts[c] and c not in (p, q)]
                    e = None
                    if kind == VERTEX_INTERIOR:
                        common = (nbrs[fam[0][1]] & nbrs[fam[1][1]]) - {r}
                        (e,) = common
                for fc in fam:
                    if e is not None and frozenset({("c", e), fc}) == target:
                        in_x = True
                    if frozenset({("c", r), fc}) == target:
                        in_y = True
            if in_x:
                sx += zx * cross[f, slot]
            if in_y:
                sy += zy * cross[f, slot]
    base = _base_term(mesh, np.ones(mesh.n_faces))[ab]
    return float(base - mesh.face_d[ab] / mesh.face_area[ab] * (sx + sy) / 16.0)


# ------------------------------------------------------------------ report
def regularity_report(mesh: Mesh, weights: np.ndarray | None = None) -> RegularityReport:
    m1, m2 = _reg_mesh_terms(mesh)
    o1, o2 = _reg_omega_terms(mesh)
    g1, g2 = _reg_gamma_terms(mesh)
    rho = varrho_faces(mesh, weights)
    worst = {
        "reg_mesh": Offender(int(np.argmax(m1)), float(m1.max())),
        "reg_mesh_omega": Offender(int(np.argmax(o1)), float(o1.max())),
        "reg_mesh_omega_det": Offender(int(np.argmax(o2)), float(o2.max())),
        "reg_mesh_gamma": Offender(int(np.argmax(g1)), float(g1.max())),
        "varrho": Offender(int(np.argmin(rho)), float(rho.min())),
    }
    return RegularityReport(
        h=mesh.h, reg_mesh=float(m1.max() + m2.max()), reg_mesh_omega=float(o1.max() + o2.max()),
        reg_mesh_gamma=float(g1.max() + g2.max()), varrho_mesh_omega=float(rho.min()), worst=worst)
