"""Plain-text and legacy-VTK output of nodal fields on the structured grid."""

import numpy as np


def grid_text(mesh, values, name="field"):
    """Nodal field as an (n+1) x (n+1) text grid, rows from y=0 to y=1."""
    n = mesh.n
    grid = np.asarray(values).reshape(n + 1, n + 1)
    lines = [f"# {name}: ({n + 1}) x ({n + 1}) nodal grid on the unit square",
             "# one row per y level, y increasing; columns x increasing"]
    for row in grid:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def write_grid_text(mesh, values, path, name="field"):
    with open(path, "w") as handle:
        handle.write(grid_text(mesh, values, name))


def read_grid_text(path):
    rows = []
    with open(path) as handle:
        for line in handle:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rows.append([float(v) for v in line.split()])
    return np.asarray(rows).ravel()


def write_vtk(mesh, path, point_data=None, cell_data=None, title="eitshape fields"):
    """Legacy ASCII VTK unstructured grid for external viewers."""
    with open(path, "w") as out:
        out.write("# vtk DataFile Version 3.0\n")
        out.write(title + "\n")
        out.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        out.write(f"POINTS {mesh.node_count} double\n")
        for x, y in mesh.nodes:
            out.write(f"{x:.17g} {y:.17g} 0\n")
        e = mesh.element_count
        out.write(f"CELLS {e} {4 * e}\n")
        for a, b, c in mesh.triangles:
            out.write(f"3 {a} {b} {c}\n")
        out.write(f"CELL_TYPES {e}\n")
        out.write("\n".join(["5"] * e) + "\n")
        if point_data:
            out.write(f"POINT_DATA {mesh.node_count}\n")
            for name, values in point_data.items():
                out.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                out.write("\n".join(f"{v:.17g}" for v in np.asarray(values)) + "\n")
        if cell_data:
            out.write(f"CELL_DATA {e}\n")
            for name, values in cell_data.items():
                out.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                out.write("\n".join(f"{v:.17g}" for v in np.asarray(values)) + "\n")
