from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh


@dataclass
class DiscreteField:
    """Cell values, Gamma-edge values and Dirichlet point data on a mesh.

    ``edges`` holds every Gamma edge (interior ones are unknowns, rim ones
    are data); it is ``None`` for schemes without edge unknowns.
    ``point_data`` is indexed by grid point id and only read at Dirichlet
    points.
    """
    cells: np.ndarray
    edges: np.ndarray | None
    point_data: np.ndarray

    def point_values(self, mesh: Mesh) -> np.ndarray:
        out = np.array(self.point_data, dtype=float, copy=True)
        out[mesh.cell_pid] = self.cells
        return out

    def __sub__(self, other: "DiscreteField") -> "DiscreteField":
        edges = None
        if self.edges is not None and other.edges is not None:
            edges = self.edges - other.edges
        return DiscreteField(self.cells - other.cells, edges, self.point_data - other.point_data)

    def homogeneous(self, mesh: Mesh) -> "DiscreteField":
        """Copy with Dirichlet data and rim-edge values set to zero."""
        edges = None
        if self.edges is not None:
            edges = np.where(mesh.edge_interior, self.edges, 0.0)
        return DiscreteField(self.cells.copy(), edges, np.zeros_like(self.point_data))


def random_field(mesh: Mesh, rng: np.random.Generator, with_edges: bool = True) -> DiscreteField:
    """Random element of the homogeneous discrete space (zero boundary data)."""
    edges = None
    if with_edges:
        edges = np.where(mesh.edge_interior, rng.standard_normal(mesh.n_edges), 0.0)
    return DiscreteField(rng.standard_normal(mesh.n_cells), edges, np.zeros(mesh.n_points))
