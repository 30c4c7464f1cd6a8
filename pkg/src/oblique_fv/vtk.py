"""Legacy ASCII VTK unstructured grids (hexahedra) for inspecting solutions."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fields import DiscreteField
from .fluxes import vertex_values
from .mesh import Mesh

VTK_HEXAHEDRON = 12
# local corner id (4x + 2y + z) in VTK hexahedron order
VTK_CORNER_ORDER = [0, 4, 6, 2, 1, 5, 7, 3]


def write_vtk(mesh: Mesh, path, field: DiscreteField | None = None,
              error: np.ndarray | None = None, title: str = "oblique_fv solution") -> Path:
    """Write cells with scalars ``T`` and ``error`` (zeros when not given).

    When ``field`` is given, its vertex averages are added as point data ``T``.
    """
    if path is None or str(path).strip() == "":
        raise ValueError("export path must not be empty")
    path = Path(path)
    cells = np.zeros(mesh.n_cells) if field is None else np.asarray(field.cells, float)
    err = np.zeros(mesh.n_cells) if error is None else np.asarray(error, float)
    if cells.shape != (mesh.n_cells,) or err.shape != (mesh.n_cells,):
        raise ValueError("cell arrays must have one value per cell")
    conn = mesh.cell_vertices[:, VTK_CORNER_ORDER]
    lines = ["# vtk DataFile Version 3.0", title.replace("\n", " ")[:255], "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {mesh.n_vertices} double"]
    lines += [f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.vertices]
    lines.append(f"CELLS {mesh.n_cells} {9 * mesh.n_cells}")
    lines += ["8 " + " ".join(map(str, row)) for row in conn.tolist()]
    lines.append(f"CELL_TYPES {mesh.n_cells}")
    lines += [str(VTK_HEXAHEDRON)] * mesh.n_cells
    lines.append(f"CELL_DATA {mesh.n_cells}")
    for name, vals in (("T", cells), ("error", err)):
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [f"{v:.17g}" for v in vals]
    if field is not None:
        vv = vertex_values(mesh, field.point_values(mesh))
        lines += [f"POINT_DATA {mesh.n_vertices}", "SCALARS T double 1", "LOOKUP_TABLE default"]
        lines += [f"{v:.17g}" for v in vv]
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    return path


@dataclass
class VtkData:
    points: np.ndarray
    cells: np.ndarray
    cell_types: np.ndarray
    cell_data: dict
    point_data: dict


def read_vtk(path) -> VtkData:
    """Reader for the subset written by :func:`write_vtk`."""
    tokens = Path(path).read_text(encoding="ascii").split("\n")
    body = " ".join(tokens[3:]).split()
    pos = 0
    out = {"cell_data": {}, "point_data": {}}
    section = None
    count = 0

    def take(n):
        nonlocal pos
        vals = body[pos:pos + n]
        pos += n
        return vals

    while pos < len(body):
        key = body[pos]
        pos += 1
        if key == "DATASET":
            take(1)
        elif key == "POINTS":
            n, _ = take(2)
            out["points"] = np.array(take(3 * int(n)), float).reshape(-1, 3)
        elif key == "CELLS":
            n, size = (int(t) for t in take(2))
            flat = np.array(take(size), dtype=np.int64).reshape(n, -1)
            out["cells"] = flat[:, 1:]
        elif key == "CELL_TYPES":
            n = int(take(1)[0])
            out["cell_types"] = np.array(take(n), dtype=np.int64)
        elif key in ("CELL_DATA", "POINT_DATA"):
            section = "cell_data" if key == "CELL_DATA" else "point_data"
            count = int(take(1)[0])
        elif key == "SCALARS":
            name, _, _ = take(3)
            take(2)  # LOOKUP_TABLE default
            out[section][name] = np.array(take(count), float)
        else:
            raise ValueError(f"unexpected VTK keyword {key!r}")
    return VtkData(out["points"], out["cells"], out["cell_types"], out["cell_data"],
                   out["point_data"])
