"""Structured P1 simplicial meshes of intervals and rectangles.

Nodes are stored in lexicographic coordinate order. Boundary nodes carry the
homogeneous Dirichlet condition; every other node is a degree of freedom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import InvalidInputError

_MEASURE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class Mesh:
    """Simplicial mesh with Dirichlet boundary flags.

    Attributes:
        dimension: 1 (intervals) or 2 (triangles).
        nodes: (n_nodes, dimension) coordinates.
        elements: (n_elements, dimension + 1) node indices.
        boundary_nodes: sorted indices of nodes on the domain boundary.
        element_measures: per-element length or area, all > 0.
        domain_measure: length/area of the meshed domain.
    """

    dimension: int
    nodes: np.ndarray
    elements: np.ndarray
    boundary_nodes: np.ndarray
    element_measures: np.ndarray
    domain_measure: float

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise InvalidInputError(f"dimension must be 1 or 2, got {self.dimension}")
        if self.nodes.ndim != 2 or self.nodes.shape[1] != self.dimension:
            raise InvalidInputError("nodes must have shape (n_nodes, dimension)")
        if self.elements.ndim != 2 or self.elements.shape[1] != self.dimension + 1:
            raise InvalidInputError("elements must have shape (n_elements, dimension + 1)")
        if self.element_measures.shape != (self.elements.shape[0],):
            raise InvalidInputError("one measure per element required")
        if not np.all(self.element_measures > 0):
            raise InvalidInputError("every element must have positive measure")
        total = math.fsum(self.element_measures)
        if abs(total - self.domain_measure) > _MEASURE_RTOL * self.domain_measure:
            raise InvalidInputError(
                f"element measures sum to {total!r}, domain measure is {self.domain_measure!r}"
            )
        for arr in (self.nodes, self.elements, self.boundary_nodes, self.element_measures):
            arr.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @cached_property
    def interior(self) -> np.ndarray:
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[self.boundary_nodes] = False
        idx = np.flatnonzero(mask)
        idx.setflags(write=False)
        return idx

    @cached_property
    def basis_gradients(self) -> np.ndarray:
        """(n_elements, dimension + 1, dimension) constant gradients of the hat functions."""
        coords = self.nodes[self.elements]  # (m, d+1, d)
        if self.dimension == 1:
            h = coords[:, 1, 0] - coords[:, 0, 0]
            g = np.empty((self.n_elements, 2, 1))
            g[:, 0, 0] = -1.0 / h
            g[:, 1, 0] = 1.0 / h
            return g
        # Rows of inv(J) give gradients of barycentric coordinates 1 and 2.
        jac = np.stack([coords[:, 1] - coords[:, 0], coords[:, 2] - coords[:, 0]], axis=2)
        inv = np.linalg.inv(jac)  # (m, 2, 2)
        g = np.empty((self.n_elements, 3, 2))
        g[:, 1] = inv[:, 0]
        g[:, 2] = inv[:, 1]
        g[:, 0] = -g[:, 1] - g[:, 2]
        return g

    def element_centroids(self) -> np.ndarray:
        return self.nodes[self.elements].mean(axis=1)

    def bump(self) -> np.ndarray:
        """Positive first-eigenfunction-like field: product of sine bumps per coordinate."""
        lo = self.nodes.min(axis=0)
        hi = self.nodes.max(axis=0)
        s = np.sin(np.pi * (self.nodes - lo) / (hi - lo))
        u = np.prod(np.clip(s, 0.0, None), axis=1)
        u[self.boundary_nodes] = 0.0
        return u / u.max()


def interior_indices(mesh: Mesh) -> list[int]:
    return [int(i) for i in mesh.interior]


def _check_bounds(lo, hi, name):
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise InvalidInputError(f"{name} bounds must be finite, got ({lo}, {hi})")
    if not lo < hi:
        raise InvalidInputError(f"{name} bounds must satisfy lo < hi, got ({lo}, {hi})")


def _check_cells(n, name):
    if isinstance(n, bool) or int(n) != n or n < 2:
        raise InvalidInputError(f"{name} must be an integer >= 2, got {n!r}")
    return int(n)


def build_interval_mesh(x_left: float, x_right: float, n_cells: int) -> Mesh:
    x_left, x_right = float(x_left), float(x_right)
    _check_bounds(x_left, x_right, "interval")
    n = _check_cells(n_cells, "n_cells")
    x = np.linspace(x_left, x_right, n + 1)
    elements = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    return Mesh(
        dimension=1,
        nodes=x[:, None],
        elements=elements,
        boundary_nodes=np.array([0, n]),
        element_measures=np.diff(x),
        domain_measure=x_right - x_left,
    )


def build_rect_mesh(x_extent, y_extent, nx: int, ny: int) -> Mesh:
    """Each grid cell is split into two triangles along its (lower-left, upper-right) diagonal."""
    x0, x1 = map(float, x_extent)
    y0, y1 = map(float, y_extent)
    _check_bounds(x0, x1, "x_extent")
    _check_bounds(y0, y1, "y_extent")
    nx = _check_cells(nx, "nx")
    ny = _check_cells(ny, "ny")
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")  # x-major: lexicographic (x, y)
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    def nid(i, j):
        return i * (ny + 1) + j

    I, J = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    I, J = I.ravel(), J.ravel()
    n00, n10, n01, n11 = nid(I, J), nid(I + 1, J), nid(I, J + 1), nid(I + 1, J + 1)
    lower = np.column_stack([n00, n10, n11])
    upper = np.column_stack([n00, n11, n01])
    elements = np.empty((2 * I.size, 3), dtype=np.int64)
    elements[0::2] = lower
    elements[1::2] = upper

    on_edge = (
        (X.ravel() == x0) | (X.ravel() == x1) | (Y.ravel() == y0) | (Y.ravel() == y1)
    )
    coords = nodes[elements]
    e1 = coords[:, 1] - coords[:, 0]
    e2 = coords[:, 2] - coords[:, 0]
    area = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    return Mesh(
        dimension=2,
        nodes=nodes,
        elements=elements,
        boundary_nodes=np.flatnonzero(on_edge),
        element_measures=area,
        domain_measure=(x1 - x0) * (y1 - y0),
    )


def write_mesh(mesh: Mesh, path) -> None:
    """Plain-text mesh: header, node lines, element lines, one boundary line."""
    lines = [f"{mesh.dimension} {mesh.n_nodes} {mesh.n_elements}"]
    lines += [" ".join(format(c, ".17g") for c in row) for row in mesh.nodes]
    lines += [" ".join(str(int(i)) for i in row) for row in mesh.elements]
    lines.append(" ".join(str(int(i)) for i in mesh.boundary_nodes))
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path) -> Mesh:
    lines = Path(path).read_text().splitlines()
    try:
        dim, n_nodes, n_el = (int(v) for v in lines[0].split())
        nodes = np.array(
            [[float(v) for v in ln.split()] for ln in lines[1 : 1 + n_nodes]]
        ).reshape(n_nodes, dim)
        elements = np.array(
            [[int(v) for v in ln.split()] for ln in lines[1 + n_nodes : 1 + n_nodes + n_el]],
            dtype=np.int64,
        ).reshape(n_el, dim + 1)
        boundary = np.array([int(v) for v in lines[1 + n_nodes + n_el].split()], dtype=np.int64)
    except (IndexError, ValueError) as exc:
        raise InvalidInputError(f"malformed mesh file {path}: {exc}") from exc
    coords = nodes[elements]
    if dim == 1:
        measures = coords[:, 1, 0] - coords[:, 0, 0]
    else:
        e1 = coords[:, 1] - coords[:, 0]
        e2 = coords[:, 2] - coords[:, 0]
        measures = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    extent = nodes.max(axis=0) - nodes.min(axis=0)
    return Mesh(
        dimension=dim,
        nodes=nodes,
        elements=elements,
        boundary_nodes=np.sort(boundary),
        element_measures=measures,
        domain_measure=float(np.prod(extent)),
    )
