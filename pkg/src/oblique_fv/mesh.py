"""Generalized hexahedral control volumes built on a representative grid.

Vertices are averages of neighbouring representative points.  Every vertex
stores exactly eight point ids (repeats allowed), so its position and any
secondary unknown are plain means over that row.  Faces not on Gamma carry
the geometric coefficients of the inner fluxes; faces on Gamma carry the
edge data used by the surface fluxes.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .grid import DIRICHLET, GAMMA, INTERIOR, RepresentativeGrid

DEGENERATE_DET = 1e-12

# corner c of a cell has offsets ((c >> 2) & 1, (c >> 1) & 1, c & 1) mapped to -1/+1
CORNER_OFFSETS = np.array([[2 * ((c >> s) & 1) - 1 for s in (2, 1, 0)] for c in range(8)])

VERTEX_INTERIOR, VERTEX_GAMMA, VERTEX_DIRICHLET = INTERIOR, GAMMA, DIRICHLET

_GAUSS = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])


class MeshDegeneracyError(ValueError):
    """A face or cell is geometrically degenerate."""


def _corner(offsets) -> int:
    m, n, o = ((np.asarray(offsets) + 1) // 2).tolist()
    return 4 * m + 2 * n + o


def _face_corners(axis: int, side: int) -> list[int]:
    """Local corner ids of a cell face, ordered counterclockwise about the outward normal."""
    b, c = (axis + 1) % 3, (axis + 2) % 3
    loop = [(-1, -1), (1, -1), (1, 1), (-1, 1)]
    if side < 0:
        loop = [(-1, -1), (-1, 1), (1, 1), (1, -1)]
    out = []
    for ob, oc in loop:
        off = [0, 0, 0]
        off[axis], off[b], off[c] = side, ob, oc
        out.append(_corner(off))
    return out


FACE_CORNERS = {(a, s): _face_corners(a, s) for a in range(3) for s in (-1, 1)}


def patch_area(v: np.ndarray) -> np.ndarray:
    """Area of bilinear patches ``v[..., 4, 3]`` by 2x2 Gauss quadrature."""
    area = 0.0
    for xi in _GAUSS:
        for eta in _GAUSS:
            dxi = (1 - eta) * (v[..., 1, :] - v[..., 0, :]) + eta * (v[..., 2, :] - v[..., 3, :])
            deta = (1 - xi) * (v[..., 3, :] - v[..., 0, :]) + xi * (v[..., 2, :] - v[..., 1, :])
            area = area + 0.25 * np.linalg.norm(np.cross(dxi, deta), axis=-1)
    return area


def patch_quadrature(v: np.ndarray):
    """Gauss points and weights (|x_xi x x_eta| included) of bilinear patches.

    Returns ``points[..., 4, 3]`` and ``weights[..., 4]``.
    """
    pts, wts = [], []
    for xi in _GAUSS:
        for eta in _GAUSS:
            x = ((1 - xi) * (1 - eta) * v[..., 0, :] + xi * (1 - eta) * v[..., 1, :]
                 + xi * eta * v[..., 2, :] + (1 - xi) * eta * v[..., 3, :])
            dxi = (1 - eta) * (v[..., 1, :] - v[..., 0, :]) + eta * (v[..., 2, :] - v[..., 3, :])
            deta = (1 - xi) * (v[..., 3, :] - v[..., 0, :]) + xi * (v[..., 2, :] - v[..., 1, :])
            pts.append(x)
            wts.append(0.25 * np.linalg.norm(np.cross(dxi, deta), axis=-1))
    return np.stack(pts, axis=-2), np.stack(wts, axis=-1)


def averaged_normal(v: np.ndarray) -> np.ndarray:
    """Integral of the unit normal over bilinear patches: half the diagonal cross product."""
    return 0.5 * np.cross(v[..., 0, :] - v[..., 2, :], v[..., 1, :] - v[..., 3, :])


def hex_volume(corners: np.ndarray) -> np.ndarray:
    """Volume of trilinear hexahedra ``corners[..., 8, 3]`` (2x2x2 Gauss, exact)."""
    bits = (CORNER_OFFSETS + 1) // 2
    vol = 0.0
    for a in _GAUSS:
        for b in _GAUSS:
            for c in _GAUSS:
                q = np.array([a, b, c])
                shape = np.where(bits == 1, q, 1 - q)  # (8, 3)
                sign = np.where(bits == 1, 1.0, -1.0)
                jac = []
                for d in range(3):
                    dn = sign[:, d] * np.prod(np.delete(shape, d, axis=1), axis=1)
                    jac.append(np.einsum("c,...ci->...i", dn, corners))
                vol = vol + np.einsum("...i,...i", jac[0], np.cross(jac[1], jac[2])) / 8.0
    return vol


def _max_pairwise(v: np.ndarray) -> np.ndarray:
    n = v.shape[-2]
    best = np.zeros(v.shape[:-2])
    for a in range(n):
        for b in range(a + 1, n):
            best = np.maximum(best, np.linalg.norm(v[..., a, :] - v[..., b, :], axis=-1))
    return best


def point_line_distance(x, a, b):
    t = b - a
    r = x - a
    return np.linalg.norm(np.cross(r, t), axis=-1) / np.linalg.norm(t, axis=-1)


@dataclass(frozen=True)
class Face:
    """Read-only view of one face not on Gamma."""
    index: int
    p: int
    q: int  # cell id, or -1 for a Dirichlet face
    q_point: int
    vertices: np.ndarray  # (4, 3) ordered oplus, boxplus, ominus, boxminus
    vertex_ids: np.ndarray
    vertex_stencils: list
    area: float
    ntilde: np.ndarray
    s: np.ndarray
    t_circle: np.ndarray
    t_square: np.ndarray
    beta: float
    alpha_circle: float
    alpha_square: float
    d_pq: float
    d_circle: float
    d_square: float

    @property
    def is_dirichlet(self) -> bool:
        return self.q < 0


class Mesh:
    """Control volumes, faces, Gamma faces and Gamma edges of a grid.

    Everything is stored as flat numpy arrays indexed by cell, face, Gamma
    face, edge or vertex id.  Face orientation is always outward from ``p``.
    """

    def __init__(self, grid: RepresentativeGrid):
        self.grid = grid
        I, J, K = grid.dims
        shape = grid.shape
        self.n_points = grid.n_points
        pts = grid.flat_points()
        self.points = pts

        # cells
        ii, jj, kk = np.meshgrid(np.arange(1, I + 1), np.arange(1, J + 1), np.arange(0, K + 1),
                                 indexing="ij")
        cell_ijk = np.stack([ii.ravel(), jj.ravel(), kk.ravel()], axis=1)
        self.cell_ijk = cell_ijk
        self.n_cells = len(cell_ijk)
        self.cell_index = np.full(shape, -1, dtype=np.int64)
        self.cell_index[tuple(cell_ijk.T)] = np.arange(self.n_cells)
        self.cell_pid = grid.pid(*cell_ijk.T)
        self.point_cell = self.cell_index.ravel().copy()
        self.cell_points = pts[self.cell_pid]

        # vertices: per cell corner, the per-axis index sets of contributing points
        lo = np.empty((self.n_cells, 8, 3), dtype=np.int64)
        hi = np.empty_like(lo)
        key = np.empty_like(lo)
        vkind = np.full((self.n_cells, 8), VERTEX_INTERIOR, dtype=np.int8)
        upper = np.array([I + 1, J + 1, K + 1])
        for c in range(8):
            for ax in range(3):
                idx = cell_ijk[:, ax]
                nb = idx + CORNER_OFFSETS[c, ax]
                single_d = (nb == upper[ax]) | ((nb == 0) & (ax < 2))
                single_g = (nb == -1) & (ax == 2)
                lo[:, c, ax] = np.where(single_d, nb, np.where(single_g, 0, np.minimum(idx, nb)))
                hi[:, c, ax] = np.where(single_d, nb, np.where(single_g, 0, np.maximum(idx, nb)))
                key[:, c, ax] = np.where(single_d, 2 * nb, np.where(single_g, 0, idx + nb))
                if ax < 2:
                    vkind[:, c] = np.where(single_d, VERTEX_DIRICHLET, vkind[:, c])
                else:
                    vkind[:, c] = np.where(single_d, VERTEX_DIRICHLET,
                                           np.where(single_g & (vkind[:, c] != VERTEX_DIRICHLET),
                                                    VERTEX_GAMMA, vkind[:, c]))
        kdims = 2 * upper + 1
        flat_key = (key[..., 0] * kdims[1] + key[..., 1]) * kdims[2] + key[..., 2]
        uniq, first, inverse = np.unique(flat_key.ravel(), return_index=True, return_inverse=True)
        self.cell_vertices = inverse.reshape(self.n_cells, 8)
        self.n_vertices = len(uniq)
        lo_v = lo.reshape(-1, 3)[first]
        hi_v = hi.reshape(-1, 3)[first]
        self.vertex_kind = vkind.ravel()[first]
        self.vertex_key = key.reshape(-1, 3)[first]
        stencil = np.empty((self.n_vertices, 8), dtype=np.int64)
        for c in range(8):
            sel = [(lo_v, hi_v)[(c >> s) & 1][:, ax] for ax, s in zip(range(3), (2, 1, 0))]
            stencil[:, c] = grid.pid(*sel)
        self.vertex_points = stencil  # 8 point ids per vertex, mean gives the vertex
        self.vertices = pts[stencil].mean(axis=1)

        self.cell_volume = hex_volume(self.vertices[self.cell_vertices])
        self.cell_diam = _max_pairwise(self.vertices[self.cell_vertices])
        if np.any(self.cell_volume <= 0):
            bad = int(np.argmin(self.cell_volume))
            raise MeshDegeneracyError(f"cell {tuple(cell_ijk[bad])} has non-positive volume")

        self._build_faces(cell_ijk, upper)
        self._build_gamma(cell_ijk)
        self.h = float(self.cell_diam.max())
        self.h_gamma = float(self.gface_diam.max())

    # ------------------------------------------------------------------ faces
    def _build_faces(self, cell_ijk, upper):
        grid = self.grid
        blocks = []
        for ax in range(3):
            step = np.zeros(3, dtype=np.int64)
            step[ax] = 1
            # + side: interior or Dirichlet neighbour
            nb = cell_ijk + step
            blocks.append((np.arange(self.n_cells), nb, ax, 1))
            if ax < 2:
                own = np.nonzero(cell_ijk[:, ax] == 1)[0]
                blocks.append((own, cell_ijk[own] - step, ax, -1))
        p_list, q_list, qp_list, fv_list, ax_list, side_list = [], [], [], [], [], []
        for cells, nb, ax, side in blocks:
            qcell = self.cell_index[tuple(nb.T)]
            qp_list.append(grid.pid(*nb.T))
            p_list.append(cells)
            q_list.append(qcell)
            fv_list.append(self.cell_vertices[cells][:, FACE_CORNERS[(ax, side)]])
            ax_list.append(np.full(len(cells), ax))
            side_list.append(np.full(len(cells), side))
        self.face_p = np.concatenate(p_list)
        self.face_q = np.concatenate(q_list)
        self.face_q_point = np.concatenate(qp_list)
        self.face_vertices = np.concatenate(fv_list)
        self.face_axis = np.concatenate(ax_list)
        self.face_side = np.concatenate(side_list)
        self.n_faces = len(self.face_p)
        self.face_dirichlet = self.face_q < 0

        v = self.vertices[self.face_vertices]
        self.face_area = patch_area(v)
        self.face_ntilde = averaged_normal(v)
        xp = self.cell_points[self.face_p]
        xq = self.points[self.face_q_point]
        dvec = xq - xp
        self.face_d = np.linalg.norm(dvec, axis=1)
        self.face_s = dvec / self.face_d[:, None]
        tc = v[:, 0] - v[:, 2]
        ts = v[:, 1] - v[:, 3]
        self.face_dc = np.linalg.norm(tc, axis=1)
        self.face_ds = np.linalg.norm(ts, axis=1)
        self.face_tc = tc / self.face_dc[:, None]
        self.face_ts = ts / self.face_ds[:, None]
        basis = np.stack([self.face_s, self.face_tc, self.face_ts], axis=2)  # columns
        self.face_det = np.linalg.det(basis)
        bad = np.abs(self.face_det) < DEGENERATE_DET
        if np.any(bad):
            f = int(np.nonzero(bad)[0][0])
            raise MeshDegeneracyError(
                f"degenerate face {self.face_name(f)}: |det(s, t_circle, t_square)| = "
                f"{abs(self.face_det[f]):.3e}")
        self.face_a = np.linalg.solve(basis, (self.face_ntilde / self.face_area[:, None])[..., None])[..., 0]
        if np.any(self.face_a[:, 0] <= 0):
            f = int(np.nonzero(self.face_a[:, 0] <= 0)[0][0])
            raise MeshDegeneracyError(f"face {self.face_name(f)} has beta <= 0 (inverted geometry)")
        self.face_beta = 1.0 / self.face_a[:, 0]
        self.face_alpha_c = -self.face_a[:, 1] * self.face_beta
        self.face_alpha_s = -self.face_a[:, 2] * self.face_beta
        self.face_centroid = v.mean(axis=1)
        unit = self.face_ntilde / np.linalg.norm(self.face_ntilde, axis=1)[:, None]
        self.face_dperp = np.abs(np.einsum("ij,ij->i", xp - self.face_centroid, unit))

    def face_name(self, f: int) -> str:
        ijk = tuple(int(t) for t in self.cell_ijk[self.face_p[f]])
        side = "+" if self.face_side[f] > 0 else "-"
        return f"#{f} (cell {ijk}, {side}{'xyz'[self.face_axis[f]]})"

    # ------------------------------------------------------------------ Gamma
    def _build_gamma(self, cell_ijk):
        gcells = np.nonzero(cell_ijk[:, 2] == 0)[0]
        self.gface_cell = gcells
        self.n_gamma = len(gcells)
        self.cell_gface = np.full(self.n_cells, -1, dtype=np.int64)
        self.cell_gface[gcells] = np.arange(self.n_gamma)
        gv = self.cell_vertices[gcells][:, FACE_CORNERS[(2, -1)]]
        self.gface_vertices = gv
        v = self.vertices[gv]
        self.gface_area = patch_area(v)
        self.gface_ntilde = averaged_normal(v)
        self.gface_normal = self.gface_ntilde / np.linalg.norm(self.gface_ntilde, axis=1)[:, None]
        self.gface_diam = _max_pairwise(v)
        self.gface_points = self.cell_points[gcells]

        a = gv
        b = np.roll(gv, -1, axis=1)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        pair = lo * self.n_vertices + hi
        uniq, first, inverse = np.unique(pair.ravel(), return_index=True, return_inverse=True)
        self.n_edges = len(uniq)
        self.gface_edges = inverse.reshape(self.n_gamma, 4)
        # canonical orientation: as traversed by the first face that owns the edge
        fa, la = np.divmod(first, 4)
        self.edge_vertices = np.stack([a[fa, la], b[fa, la]], axis=1)
        owners = np.full((self.n_edges, 2), -1, dtype=np.int64)
        owners[:, 0] = fa
        flat_face = np.repeat(np.arange(self.n_gamma), 4)
        flat_edge = self.gface_edges.ravel()
        second = flat_face != fa[flat_edge]
        owners[flat_edge[second], 1] = flat_face[second]
        counts = np.bincount(flat_edge, minlength=self.n_edges)
        if counts.max() > 2:
            raise MeshDegeneracyError("a Gamma edge is shared by more than two faces")
        self.edge_faces = owners
        self.edge_interior = owners[:, 1] >= 0
        self.gface_edge_sign = np.where(a == self.edge_vertices[self.gface_edges, 0], 1.0, -1.0)

        ea = self.vertices[self.edge_vertices[:, 0]]
        eb = self.vertices[self.edge_vertices[:, 1]]
        evec = eb - ea
        self.edge_length = np.linalg.norm(evec, axis=1)
        self.edge_mid = 0.5 * (ea + eb)
        self.edge_gauss = np.stack([ea + t * evec for t in _GAUSS], axis=1)
        n0 = self.gface_normal[owners[:, 0]]
        n1 = np.where(self.edge_interior[:, None], self.gface_normal[owners[:, 1]], n0)
        cn = np.cross(evec, 0.5 * (n0 + n1))
        norm = np.linalg.norm(cn, axis=1)
        if np.any(norm < 1e-300):
            raise MeshDegeneracyError(f"zero conormal on Gamma edge {int(np.argmin(norm))}")
        self.edge_conormal = cn / norm[:, None]

        xp = self.gface_points
        ga = self.vertices[a]
        gb = self.vertices[b]
        self.gface_dperp = point_line_distance(xp[:, None, :], ga, gb)
        if np.any(self.gface_dperp < 1e-14):
            raise MeshDegeneracyError("representative point lies on a Gamma edge line")

    # ---------------------------------------------------------------- helpers
    @cached_property
    def dirichlet_points(self) -> np.ndarray:
        return np.nonzero(self.point_cell < 0)[0]

    @cached_property
    def interior_faces(self) -> np.ndarray:
        return np.nonzero(~self.face_dirichlet)[0]

    @cached_property
    def dirichlet_faces(self) -> np.ndarray:
        return np.nonzero(self.face_dirichlet)[0]

    @cached_property
    def interior_edges(self) -> np.ndarray:
        return np.nonzero(self.edge_interior)[0]

    def gface_conormal(self) -> np.ndarray:
        """Outward conormal of every (Gamma face, local edge), shape (n_gamma, 4, 3)."""
        return self.edge_conormal[self.gface_edges] * self.gface_edge_sign[..., None]

    def vertex_stencil(self, vid: int) -> list[tuple[int, float, str]]:
        """Unique contributing points of a vertex as (point id, weight, role)."""
        ids, counts = np.unique(self.vertex_points[vid], return_counts=True)
        out = []
        for pid, c in zip(ids.tolist(), counts.tolist()):
            out.append((pid, c / 8.0, self.point_role(pid)))
        return out

    def point_role(self, pid: int) -> str:
        if self.point_cell[pid] >= 0:
            return "cell"
        ijk = np.unravel_index(pid, self.grid.shape)
        upper = self.grid.shape
        extremal = sum(int(t == 0 or t == u - 1) for t, u in zip(ijk, upper))
        return "dirichlet" if extremal == 1 else "boundary_edge"

    def face(self, f: int) -> Face:
        vids = self.face_vertices[f]
        return Face(
            index=f, p=int(self.face_p[f]), q=int(self.face_q[f]),
            q_point=int(self.face_q_point[f]), vertices=self.vertices[vids].copy(),
            vertex_ids=vids.copy(), vertex_stencils=[self.vertex_stencil(v) for v in vids],
            area=float(self.face_area[f]), ntilde=self.face_ntilde[f].copy(),
            s=self.face_s[f].copy(), t_circle=self.face_tc[f].copy(),
            t_square=self.face_ts[f].copy(), beta=float(self.face_beta[f]),
            alpha_circle=float(self.face_alpha_c[f]), alpha_square=float(self.face_alpha_s[f]),
            d_pq=float(self.face_d[f]), d_circle=float(self.face_dc[f]),
            d_square=float(self.face_ds[f]))

    def cells_faces(self) -> list[np.ndarray]:
        """Non-Gamma faces of every cell with their orientation sign (+1 when the cell is p)."""
        out = [[] for _ in range(self.n_cells)]
        for f in range(self.n_faces):
            out[self.face_p[f]].append((f, 1))
            if self.face_q[f] >= 0:
                out[self.face_q[f]].append((f, -1))
        return [np.array(x) for x in out]

    def stats(self) -> dict:
        return {
            "h": self.h, "h_gamma": self.h_gamma, "cells": self.n_cells,
            "faces": self.n_faces, "dirichlet_faces": int(self.face_dirichlet.sum()),
            "gamma_faces": self.n_gamma, "gamma_edges": self.n_edges,
            "interior_gamma_edges": int(self.edge_interior.sum()), "vertices": self.n_vertices,
        }


def build_mesh(grid: RepresentativeGrid) -> Mesh:
    return Mesh(grid)


def boundary_edge_conormal(mesh: Mesh, sigma: int, e: int) -> np.ndarray:
    """Unit conormal of Gamma face ``sigma`` on its local edge ``e`` (0..3), pointing out of sigma."""
    return mesh.edge_conormal[mesh.gface_edges[sigma, e]] * mesh.gface_edge_sign[sigma, e]
