"""CSV and legacy VTK writers. Every float is written with 17 significant digits."""

from __future__ import annotations

import csv
import os

import numpy as np

from .mesh import FeOperators, Mesh


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def write_table_csv(path, header, rows) -> None:
    """Write ``rows`` under ``header``; numbers formatted by :func:`fmt`."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_table_csv(path):
    """Return ``(header, float array)``."""
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        data = [[float(v) for v in row] for row in r]
    return header, np.array(data, dtype=float).reshape(len(data), len(header))


_AXES = ("x", "y", "z")


def write_field_snapshot(values, mesh: Mesh, path, format: str = "csv", component_names=None, time=None) -> None:
    """Write a nodal field as CSV (one row per node) or legacy ASCII VTK."""
    u = np.asarray(values, dtype=float).reshape(mesh.n_nodes, -1)
    names = list(component_names or [f"u{k}" for k in range(u.shape[1])])
    if len(names) != u.shape[1]:
        raise ValueError("component name count does not match the field")
    if format == "csv":
        header = list(_AXES[: mesh.dim]) + names
        rows = np.concatenate([mesh.node_coords, u], axis=1)
        write_table_csv(path, header, rows)
    elif format in ("vtk", "vtk_legacy_ascii"):
        _write_vtk(u, mesh, path, names, time)
    else:
        raise ValueError(f"unknown snapshot format {format!r}")


def read_field_csv(path, dim: int):
    """Inverse of the CSV snapshot writer: ``(coords, values, component_names)``."""
    header, data = read_table_csv(path)
    return data[:, :dim], data[:, dim:], header[dim:]


def _unwrapped_points(mesh: Mesh):
    """Points and connectivity that draw seam-crossing cells at their true position."""
    verts = mesh.element_vertices.reshape(-1, mesh.dim)
    nodes = mesh.elements.reshape(-1)
    shift = np.rint((verts - mesh.node_coords[nodes]) / mesh.domain_extent).astype(int)
    keys = np.concatenate([nodes[:, None], shift], axis=1)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    coords = mesh.node_coords[uniq[:, 0]] + uniq[:, 1:] * mesh.domain_extent
    return coords, uniq[:, 0], inverse.reshape(mesh.elements.shape)


def _write_vtk(u, mesh, path, names, time):
    coords, point_node, conn = _unwrapped_points(mesh)
    P = len(coords)
    K, nv = conn.shape
    cell_type = 3 if mesh.dim == 1 else 5
    lines = ["# vtk DataFile Version 3.0"]
    lines.append("mclfem field" + ("" if time is None else f" t={fmt(time)}"))
    lines += ["ASCII", "DATASET UNSTRUCTURED_GRID", f"POINTS {P} double"]
    xyz = np.zeros((P, 3))
    xyz[:, : mesh.dim] = coords
    lines += [" ".join(fmt(c) for c in p) for p in xyz]
    lines.append(f"CELLS {K} {K * (nv + 1)}")
    lines += [" ".join([str(nv)] + [str(int(v)) for v in row]) for row in conn]
    lines.append(f"CELL_TYPES {K}")
    lines += [str(cell_type)] * K
    lines.append(f"POINT_DATA {P}")
    for k, name in enumerate(names):
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [fmt(v) for v in u[point_node, k]]
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_mesh_csv(mesh: Mesh, path, nodes_path=None) -> None:
    """Element connectivity (and optionally node coordinates) as CSV."""
    if nodes_path is not None:
        write_table_csv(nodes_path, ["node"] + list(_AXES[: mesh.dim]),
                        [[k, *x] for k, x in enumerate(mesh.node_coords)])
    header = ["element"] + [f"v{k}" for k in range(mesh.dim + 1)] + ["volume", "diameter"]
    rows = [
        [e, *mesh.elements[e], mesh.element_volumes[e], mesh.element_diameters[e]]
        for e in range(mesh.n_elements)
    ]
    write_table_csv(path, header, rows)


def write_edge_debug_csv(ops: FeOperators, edges, path) -> None:
    """Per-edge d_ij, alpha_ij, d_min and entropy residual."""
    n = ops.n_edges

    def col(a):
        if a is None:
            return np.full(n, np.nan)
        a = np.asarray(a, dtype=float)
        return a if a.ndim == 1 else a[:, 0]

    header = ["i", "j", "c_norm", "d", "alpha", "d_min", "entropy_residual", "limited_flux"]
    data = zip(
        ops.edges[:, 0], ops.edges[:, 1], ops.edge_norms, col(edges.d), col(edges.alpha),
        col(edges.d_min), col(edges.entropy_residual), col(edges.limited_flux),
    )
    write_table_csv(path, header, data)
