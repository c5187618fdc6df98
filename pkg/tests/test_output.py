import numpy as np
import pytest

from mclfem.mesh import assemble_fe_operators, build_uniform_periodic_mesh
from mclfem.models import AdmissibilityParams, ModelSpec
from mclfem.output import (
    fmt,
    read_field_csv,
    read_table_csv,
    write_edge_debug_csv,
    write_field_snapshot,
    write_mesh_csv,
    write_table_csv,
)
from mclfem.scheme import LimiterConfig, semidiscrete_rhs


def test_fmt():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(3) == "3" and fmt(True) == "1" and fmt(np.int64(7)) == "7"
    assert float(fmt(np.pi)) == np.pi


def test_constant_field_csv(tmp_path):
    mesh = build_uniform_periodic_mesh(2, 4, [1.0, 1.0])
    write_field_snapshot(np.full((16, 2), 0.25), mesh, tmp_path / "c.csv", "csv", ["a", "b"])
    header, data = read_table_csv(tmp_path / "c.csv")
    assert header == ["x", "y", "a", "b"]
    assert np.all(data[:, 2:] == 0.25)


def test_csv_round_trip_full_precision(tmp_path):
    mesh = build_uniform_periodic_mesh(1, 16, [1.0])
    u = np.random.default_rng(0).standard_normal((16, 3)) * 1e3
    write_field_snapshot(u, mesh, tmp_path / "u.csv", "csv", ["rho", "m1", "E"])
    coords, values, names = read_field_csv(tmp_path / "u.csv", 1)
    assert np.array_equal(values, u) and np.array_equal(coords, mesh.node_coords)
    assert names == ["rho", "m1", "E"]


def _parse_vtk(path):
    lines = open(path).read().splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0" and lines[2] == "ASCII"
    k = lines.index(next(line for line in lines if line.startswith("POINTS")))
    P = int(lines[k].split()[1])
    pts = np.array([[float(v) for v in line.split()] for line in lines[k + 1 : k + 1 + P]])
    c = lines.index(next(line for line in lines if line.startswith("CELLS")))
    K = int(lines[c].split()[1])
    cells = [list(map(int, line.split())) for line in lines[c + 1 : c + 1 + K]]
    t = lines.index(f"CELL_TYPES {K}")
    types = {int(v) for v in lines[t + 1 : t + 1 + K]}
    return pts, cells, types, lines


@pytest.mark.parametrize("dim,ctype", [(1, 3), (2, 5)])
def test_vtk_cell_types_and_geometry(tmp_path, dim, ctype):
    mesh = build_uniform_periodic_mesh(dim, 4, [1.0] * dim)
    u = np.arange(mesh.n_nodes, dtype=float)
    write_field_snapshot(u, mesh, tmp_path / "u.vtk", "vtk", ["u"], time=0.5)
    pts, cells, types, lines = _parse_vtk(tmp_path / "u.vtk")
    assert types == {ctype}
    assert all(c[0] == dim + 1 and len(c) == dim + 2 for c in cells)
    # every cell is drawn with its true (unwrapped) vertices
    for k, c in enumerate(cells):
        np.testing.assert_allclose(pts[c[1:], :dim], mesh.element_vertices[k], atol=1e-15)
    assert "SCALARS u double 1" in lines and "t=0.5" in lines[1]


def test_unknown_format(tmp_path):
    mesh = build_uniform_periodic_mesh(1, 4, [1.0])
    with pytest.raises(ValueError):
        write_field_snapshot(np.zeros(4), mesh, tmp_path / "u.xyz", "hdf5")
    with pytest.raises(ValueError):
        write_field_snapshot(np.zeros(4), mesh, tmp_path / "u.csv", "csv", ["a", "b"])


def test_mesh_and_edge_tables(tmp_path):
    mesh = build_uniform_periodic_mesh(1, 8, [1.0])
    ops = assemble_fe_operators(mesh)
    write_mesh_csv(mesh, tmp_path / "e.csv", tmp_path / "n.csv")
    header, data = read_table_csv(tmp_path / "e.csv")
    assert header == ["element", "v0", "v1", "volume", "diameter"] and data.shape == (8, 5)
    u = np.sin(2 * np.pi * mesh.node_coords[:, :1])
    _, edges = semidiscrete_rhs(ops, ModelSpec.burgers(1), u, LimiterConfig(mode="bv_entropy"), AdmissibilityParams())
    write_edge_debug_csv(ops, edges, tmp_path / "edges.csv")
    header, data = read_table_csv(tmp_path / "edges.csv")
    assert data.shape == (ops.n_edges, 8)
    np.testing.assert_array_equal(data[:, header.index("d")], edges.d)


def test_table_writer_creates_directories(tmp_path):
    write_table_csv(tmp_path / "a" / "b" / "t.csv", ["x"], [[1.5]])
    assert (tmp_path / "a" / "b" / "t.csv").read_text() == "x\n1.5\n"
