"""Periodic simplicial meshes and the P1 coefficients m_i, m_ij, c_ij."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp


class MeshError(ValueError):
    """Invalid mesh configuration."""


class AssemblyError(RuntimeError):
    """Raised when an element cannot be assembled (e.g. zero volume)."""


@dataclass(frozen=True, eq=False)
class Mesh:
    """Simplicial mesh of a periodic box.

    ``element_vertices`` holds the *unwrapped* vertex coordinates of every
    element, so elements touching the periodic seam keep their true shape
    while ``elements`` refers to the identified (owner) node indices.
    """

    dim: int
    node_coords: np.ndarray
    elements: np.ndarray
    element_vertices: np.ndarray
    domain_extent: np.ndarray
    max_shape_ratio: float = 10.0

    def __post_init__(self):
        n = len(self.node_coords)
        if self.elements.min() < 0 or self.elements.max() >= n:
            raise MeshError("element references an invalid node index")
        vol = self.element_volumes
        total = float(np.prod(self.domain_extent))
        if abs(vol.sum() - total) > 1e-12 * total:
            raise MeshError(f"elements cover {vol.sum()!r}, domain volume is {total!r}")
        worst = float(self.shape_ratios.max())
        if worst > self.max_shape_ratio:
            raise MeshError(f"shape ratio {worst:.3g} exceeds {self.max_shape_ratio}")

    @property
    def n_nodes(self) -> int:
        return len(self.node_coords)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @cached_property
    def _affine(self):
        X = self.element_vertices
        k = len(X)
        B = np.concatenate([np.ones((k, self.dim + 1, 1)), X], axis=2)
        det = np.linalg.det(B)
        vol = np.abs(det) / math.factorial(self.dim)
        return B, vol

    @cached_property
    def element_volumes(self) -> np.ndarray:
        return self._affine[1]

    @cached_property
    def element_gradients(self) -> np.ndarray:
        """Gradients of the local basis functions, shape (K, d+1, d)."""
        B, vol = self._affine
        bad = np.flatnonzero(vol <= 1e-14 * np.prod(self.domain_extent))
        if bad.size:
            raise AssemblyError(f"degenerate element {int(bad[0])} (volume {vol[bad[0]]:.3e})")
        inv = np.linalg.inv(B)
        return np.transpose(inv[:, 1:, :], (0, 2, 1))

    @cached_property
    def element_diameters(self) -> np.ndarray:
        X = self.element_vertices
        diam = np.zeros(len(X))
        for a in range(self.dim + 1):
            for b in range(a + 1, self.dim + 1):
                diam = np.maximum(diam, np.linalg.norm(X[:, a] - X[:, b], axis=1))
        return diam

    @property
    def h_max(self) -> float:
        return float(self.element_diameters.max())

    @property
    def h_min(self) -> float:
        return float(self.element_diameters.min())

    @cached_property
    def shape_ratios(self) -> np.ndarray:
        """Circumradius over inradius per element (1 for segments)."""
        if self.dim == 1:
            return np.ones(self.n_elements)
        X = self.element_vertices
        a = np.linalg.norm(X[:, 1] - X[:, 2], axis=1)
        b = np.linalg.norm(X[:, 0] - X[:, 2], axis=1)
        c = np.linalg.norm(X[:, 0] - X[:, 1], axis=1)
        area = self.element_volumes
        circum = a * b * c / (4.0 * area)
        inradius = 2.0 * area / (a + b + c)
        return circum / inradius


def build_uniform_periodic_mesh(dim: int, cells_per_axis: int, extent) -> Mesh:
    """Uniform periodic mesh of ``[0, L_1) x ... x [0, L_d)``.

    In 2D each square is split into the two triangles (p00, p10, p11) and
    (p00, p11, p01). Periodic nodes are identified by hashing wrapped
    coordinates at a tolerance of 1e-9 times the extent.
    """
    if dim not in (1, 2):
        raise MeshError(f"dim must be 1 or 2, got {dim}")
    if int(cells_per_axis) != cells_per_axis or cells_per_axis < 4:
        raise MeshError(f"cells_per_axis must be an integer >= 4, got {cells_per_axis}")
    n = int(cells_per_axis)
    L = np.atleast_1d(np.asarray(extent, dtype=float))
    if L.shape != (dim,) or np.any(L <= 0):
        raise MeshError(f"extent must be {dim} positive numbers, got {extent!r}")

    axes = [np.linspace(0.0, L[k], n + 1) for k in range(dim)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)

    tol = 1e-9 * L
    wrapped = np.mod(grid, L)
    wrapped[np.abs(wrapped - L) < tol] = 0.0
    keys = np.rint(wrapped / tol).astype(np.int64)
    owner = {}
    lattice_to_node = np.empty(len(grid), dtype=np.int64)
    coords = []
    for p, key in enumerate(map(tuple, keys)):
        idx = owner.get(key)
        if idx is None:
            idx = owner[key] = len(coords)
            coords.append(wrapped[p])
        lattice_to_node[p] = idx
    node_coords = np.array(coords)

    if dim == 1:
        i = np.arange(n)
        lattice_elems = np.stack([i, i + 1], axis=1)
    else:
        i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        i, j = i.ravel(), j.ravel()
        p00 = i * (n + 1) + j
        p10 = (i + 1) * (n + 1) + j
        p01 = i * (n + 1) + j + 1
        p11 = (i + 1) * (n + 1) + j + 1
        lattice_elems = np.concatenate(
            [np.stack([p00, p10, p11], axis=1), np.stack([p00, p11, p01], axis=1)]
        )
    return Mesh(
        dim=dim,
        node_coords=node_coords,
        elements=lattice_to_node[lattice_elems],
        element_vertices=grid[lattice_elems],
        domain_extent=L,
    )


@dataclass(frozen=True, eq=False)
class FeOperators:
    """Lumped mass, consistent mass and discrete gradient coefficients.

    Edge arrays are stored once per unordered pair ``(i, j)`` with ``i < j``;
    ``grad_coeffs[e]`` is c_ij and the reverse orientation is ``-c_ij``.
    The full sparse matrices are kept for identity checks and the
    consistent-mass solve.
    """

    n_nodes: int
    dim: int
    lumped_mass: np.ndarray
    adjacency: tuple
    edges: np.ndarray
    consistent_mass: np.ndarray
    mass_diagonal: np.ndarray
    grad_coeffs: np.ndarray
    mass_matrix: sp.csr_matrix
    grad_matrices: tuple

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def edge_norms(self) -> np.ndarray:
        return np.linalg.norm(self.grad_coeffs, axis=1)

    @cached_property
    def _directed(self):
        i, j = self.edges[:, 0], self.edges[:, 1]
        rows = np.concatenate([i, j])
        cols = np.concatenate([j, i])
        order = np.lexsort((cols, rows))
        starts = np.searchsorted(rows[order], np.arange(self.n_nodes))
        return rows, cols, order, starts

    def gather(self, values_ij: np.ndarray, values_ji: np.ndarray, reduce=np.add) -> np.ndarray:
        """Reduce directed-edge values onto nodes.

        Node ``i`` receives ``values_ij`` of the edges where it is the first
        index and ``values_ji`` where it is the second. The reduction runs in
        ascending neighbour order, so sums are bitwise reproducible.
        """
        rows, cols, order, starts = self._directed
        vals = np.concatenate([values_ij, values_ji])[order]
        return reduce.reduceat(vals, starts, axis=0)


def assemble_fe_operators(mesh: Mesh) -> FeOperators:
    """Exact P1 integration of m_ij = (phi_i, phi_j) and c_ij = (phi_i, grad phi_j)."""
    d = mesh.dim
    grads = mesh.element_gradients  # raises on degenerate elements
    vol = mesh.element_volumes
    elems = mesh.elements
    nloc = d + 1
    N = mesh.n_nodes

    rows = np.repeat(elems, nloc, axis=1).ravel()
    cols = np.tile(elems, (1, nloc)).ravel()
    local_mass = (np.ones((nloc, nloc)) + np.eye(nloc)) / ((d + 1) * (d + 2))
    mass_vals = (vol[:, None, None] * local_mass[None]).ravel()
    M = sp.coo_matrix((mass_vals, (rows, cols)), shape=(N, N)).tocsr()
    M.sum_duplicates()

    C = []
    for k in range(d):
        # c_ab = |K|/(d+1) * grad(phi_b), independent of a
        vals = vol[:, None, None] / (d + 1) * np.broadcast_to(grads[:, None, :, k], (len(elems), nloc, nloc))
        Ck = sp.coo_matrix((vals.ravel(), (rows, cols)), shape=(N, N)).tocsr()
        Ck.sum_duplicates()
        C.append(Ck)

    upper = sp.triu(M, k=1).tocoo()
    order = np.lexsort((upper.col, upper.row))
    ei, ej = upper.row[order].astype(np.int64), upper.col[order].astype(np.int64)
    edges = np.stack([ei, ej], axis=1)
    m_edge = np.asarray(upper.data[order], dtype=float)
    c_edge = np.stack([np.asarray(Ck[ei, ej]).ravel() for Ck in C], axis=1)

    adjacency = tuple(np.sort(M.indices[M.indptr[i] : M.indptr[i + 1]]) for i in range(N))
    lumped = np.asarray(M.sum(axis=1)).ravel()
    return FeOperators(
        n_nodes=N,
        dim=d,
        lumped_mass=lumped,
        adjacency=adjacency,
        edges=edges,
        consistent_mass=m_edge,
        mass_diagonal=M.diagonal().copy(),
        grad_coeffs=c_edge,
        mass_matrix=M,
        grad_matrices=tuple(C),
    )


@dataclass
class IdentityReport:
    violations: dict
    tolerance: float

    @property
    def passed(self) -> dict:
        out = {k: v <= self.tolerance for k, v in self.violations.items()}
        return out

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def lines(self) -> list[str]:
        return [
            f"{name:<22s} {value:.3e}  {'PASS' if value <= self.tolerance else 'FAIL'}"
            for name, value in self.violations.items()
        ]


def verify_operator_identities(ops: FeOperators, tolerance: float = 1e-13) -> IdentityReport:
    """Relative violations of c_ii = 0, c_ij = -c_ji, sum_j c_ij = 0, m_i = sum_j m_ij, m_i > 0.

    c-identities are scaled by max |c_ij|, mass identities by max m_i.
    Positivity reports ``max(0, -min m_i / max m_i)`` and is treated as
    failed when any m_i is not strictly positive.
    """
    c_scale = max(abs(Ck).max() for Ck in ops.grad_matrices) or 1.0
    diag = max(float(np.abs(Ck.diagonal()).max()) for Ck in ops.grad_matrices)
    anti = max(float(abs(Ck + Ck.T).max()) if (Ck + Ck.T).nnz else 0.0 for Ck in ops.grad_matrices)
    ones = np.ones(ops.n_nodes)
    rowsum = max(float(np.abs(Ck @ ones).max()) for Ck in ops.grad_matrices)
    edge_sync = max(
        float(np.abs(np.asarray(Ck[ops.edges[:, 0], ops.edges[:, 1]]).ravel() - ops.grad_coeffs[:, k]).max())
        for k, Ck in enumerate(ops.grad_matrices)
    )
    m = ops.lumped_mass
    m_scale = float(np.abs(m).max()) or 1.0
    lumping = float(np.abs(m - ops.mass_matrix @ ones).max())
    min_m = float(m.min())
    positivity = 0.0 if min_m > 0 else max(1.0, -min_m / m_scale)
    return IdentityReport(
        violations={
            "c_ii_zero": diag / c_scale,
            "c_antisymmetry": anti / c_scale,
            "c_row_sum": rowsum / c_scale,
            "c_edge_storage": edge_sync / c_scale,
            "lumped_mass_row_sum": lumping / m_scale,
            "lumped_mass_positive": positivity,
        },
        tolerance=tolerance,
    )


def _as_components(values, n_nodes: int, components: int | None = None) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if components is not None:
        if v.size != components * n_nodes:
            raise ValueError(f"field has {v.size} entries, expected {components}*{n_nodes}")
        return v.reshape(n_nodes, components)
    if v.shape[0] != n_nodes:
        raise ValueError(f"field has {v.shape[0]} rows, expected {n_nodes}")
    return v.reshape(n_nodes, -1)


def h1_seminorm_sq(mesh: Mesh, field, components: int = 1) -> float:
    """Sum over elements of the integral of |grad v_h|^2 (exact for P1)."""
    v = _as_components(field, mesh.n_nodes, components)
    local = v[mesh.elements]  # (K, d+1, m)
    grad = np.einsum("kad,kam->kmd", mesh.element_gradients, local)
    return float(np.sum(mesh.element_volumes * np.sum(grad**2, axis=(1, 2))))


def d_h_form(ops: FeOperators, v, w) -> float:
    """d_h(v, w) = sum_i sum_{j != i} |c_ij| (v_j - v_i).(w_j - w_i)."""
    v = _as_components(v, ops.n_nodes)
    w = _as_components(w, ops.n_nodes)
    if v.shape != w.shape:
        raise ValueError(f"component mismatch: {v.shape} vs {w.shape}")
    i, j = ops.edges[:, 0], ops.edges[:, 1]
    dv = v[j] - v[i]
    dw = w[j] - w[i]
    # every unordered edge appears twice in the double sum
    return float(2.0 * np.sum(ops.edge_norms * np.sum(dv * dw, axis=1)))
