"""Structured simplicial meshes and uniform (red) refinement.

All generators tile a grid of axis-aligned squares/cubes and split each of
them the same way:

* 2D: every square is cut along its lower-left to upper-right diagonal.
* 3D: every cube is cut into the six Kuhn tetrahedra sharing the main
  diagonal from its lower corner to its upper corner.

Cells are stored with positive orientation.  Refinement inserts edge
midpoints, so coarse P1 functions are represented exactly on the fine mesh
through :class:`Prolongation`.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

DOMAIN_MEASURE = {
    "interval": 1.0,
    "unit_square": 1.0,
    "unit_cube": 1.0,
    "l_shape": 3.0,
    "fichera": 7.0,
}


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming simplicial mesh.

    Attributes
    ----------
    vertices : (V, d) float array
    cells : (C, d+1) int array, positively oriented
    domain_tag : str
    level : int
        Number of uniform refinements applied to the generated mesh.
    """

    vertices: np.ndarray
    cells: np.ndarray
    domain_tag: str
    level: int = 0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.vertices.setflags(write=False)
        self.cells.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_cells(self) -> int:
        return self.cells.shape[0]

    def cell_volumes(self) -> np.ndarray:
        """Signed cell measures (positive for a valid mesh)."""
        if "volumes" not in self._cache:
            self._cache["volumes"] = signed_volumes(self.vertices, self.cells)
        return self._cache["volumes"]

    def barycentric_gradients(self) -> np.ndarray:
        """Constant gradients of the P1 hat functions, shape (C, d+1, d)."""
        if "grads" not in self._cache:
            x = self.vertices[self.cells]
            jac = np.transpose(x[:, 1:, :] - x[:, :1, :], (0, 2, 1))
            inv = np.linalg.inv(jac)  # rows: gradients of lambda_1..lambda_d
            g = np.empty_like(x)
            g[:, 1:, :] = inv
            g[:, 0, :] = -inv.sum(axis=1)
            g.setflags(write=False)
            self._cache["grads"] = g
        return self._cache["grads"]

    def edges(self) -> np.ndarray:
        """Unique sorted vertex pairs, shape (E, 2)."""
        pairs = itertools.combinations(range(self.dim + 1), 2)
        e = np.vstack([self.cells[:, [a, b]] for a, b in pairs])
        e.sort(axis=1)
        return np.unique(e, axis=0)

    def facets(self) -> tuple[np.ndarray, np.ndarray]:
        """Unique sorted facets and the number of cells sharing each."""
        d = self.dim
        f = np.vstack([np.delete(self.cells, i, axis=1) for i in range(d + 1)])
        f.sort(axis=1)
        return np.unique(f, axis=0, return_counts=True)


@dataclass(frozen=True)
class Prolongation:
    """Coarse-to-fine map for P1 nodal data.

    ``parents[i] = (a, b)`` says fine vertex ``i`` sits at the midpoint of
    coarse vertices ``a`` and ``b``; ``a == b`` for inherited vertices.
    """

    coarse_level: int
    fine_level: int
    parents: np.ndarray

    def __call__(self, values: np.ndarray) -> np.ndarray:
        """Prolong nodal values of shape (Vc,), (Vc, m) or flat (m*Vc,)."""
        values = np.asarray(values)
        n_coarse = int(self.parents.max()) + 1
        flat = values.ndim == 1 and values.size != n_coarse
        v = values.reshape(n_coarse, -1) if flat else values
        out = 0.5 * (v[self.parents[:, 0]] + v[self.parents[:, 1]])
        return out.reshape(-1) if flat else out


def signed_volumes(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    x = vertices[cells]
    d = vertices.shape[1]
    jac = x[:, 1:, :] - x[:, :1, :]
    if d == 1:
        return jac[:, 0, 0]
    return np.linalg.det(jac) / math.factorial(d)


def _orient(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    cells = cells.copy()
    neg = signed_volumes(vertices, cells) < 0
    cells[neg, -2], cells[neg, -1] = cells[neg, -1], cells[neg, -2].copy()
    return cells


def _compact(vertices: np.ndarray, cells: np.ndarray):
    used = np.unique(cells)
    remap = -np.ones(len(vertices), dtype=np.int64)
    remap[used] = np.arange(len(used))
    return vertices[used], remap[cells]


_KUHN = [
    np.cumsum(np.vstack([np.zeros(3, int), np.eye(3, dtype=int)[list(p)]]), axis=0)
    for p in itertools.permutations(range(3))
]
_SQUARE = [np.array([[0, 0], [1, 0], [1, 1]]), np.array([[0, 0], [1, 1], [0, 1]])]


def _grid_mesh(n: int, lo: float, units: int, dim: int, keep, tag: str) -> Mesh:
    """Split every kept grid box of ``[lo, lo+units]^dim`` (n boxes per unit).

    ``keep(lower_corner_coords)`` selects the boxes by their lower corner.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    m = units * n
    axes = np.linspace(lo, lo + units, m + 1)
    # index i = ix + (m+1) iy + (m+1)^2 iz, x fastest
    grid = np.stack(np.meshgrid(*[axes] * dim, indexing="ij"), axis=-1)
    vertices = grid.transpose(*reversed(range(dim)), dim).reshape(-1, dim)
    strides = (m + 1) ** np.arange(dim)
    boxes = np.array(list(itertools.product(range(m), repeat=dim)))[:, ::-1]
    boxes = boxes[keep(lo + boxes / n)]
    pattern = _SQUARE if dim == 2 else _KUHN
    cells = np.vstack([(boxes[:, None, :] + p[None]) @ strides for p in pattern])
    vertices, cells = _compact(vertices, cells)
    return Mesh(vertices, _orient(vertices, cells), tag)


def interval_mesh(n: int) -> Mesh:
    """Uniform mesh of [0, 1] with ``n`` elements."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    vertices = np.linspace(0.0, 1.0, n + 1)[:, None]
    cells = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    return Mesh(vertices, cells, "interval")


def unit_square_mesh(n: int) -> Mesh:
    """[0,1]^2 with n x n squares, each split along the (1,1) diagonal."""
    return _grid_mesh(n, 0.0, 1, 2, lambda c: np.ones(len(c), bool), "unit_square")


def unit_cube_mesh(n: int) -> Mesh:
    """[0,1]^3 with n^3 cubes, each split into 6 Kuhn tetrahedra."""
    return _grid_mesh(n, 0.0, 1, 3, lambda c: np.ones(len(c), bool), "unit_cube")


def l_shape_mesh(n: int) -> Mesh:
    """[-1,1]^2 minus (0,1]^2; ``n`` squares per unit length.

    The re-entrant corner at the origin has opening angle 3*pi/2.
    """
    return _grid_mesh(n, -1.0, 2, 2, lambda c: ~np.all(c >= 0, axis=1), "l_shape")


def fichera_mesh(n: int) -> Mesh:
    """[-1,1]^3 minus (0,1]^3 (Fichera corner); ``n`` cubes per unit length."""
    return _grid_mesh(n, -1.0, 2, 3, lambda c: ~np.all(c >= 0, axis=1), "fichera")


GENERATORS = {
    "interval": interval_mesh,
    "unit_square": unit_square_mesh,
    "unit_cube": unit_cube_mesh,
    "l_shape": l_shape_mesh,
    "fichera": fichera_mesh,
}


def make_mesh(domain: str, n: int) -> Mesh:
    try:
        return GENERATORS[domain](n)
    except KeyError:
        raise ValueError(f"unknown domain {domain!r}") from None


# Children in terms of local vertices 0..d and edge midpoints (a, b).
_RED_1D = [[0, (0, 1)], [(0, 1), 1]]
_RED_2D = [
    [0, (0, 1), (0, 2)],
    [(0, 1), 1, (1, 2)],
    [(0, 2), (1, 2), 2],
    [(0, 1), (1, 2), (0, 2)],
]
_CORNERS_3D = [
    [0, (0, 1), (0, 2), (0, 3)],
    [(0, 1), 1, (1, 2), (1, 3)],
    [(0, 2), (1, 2), 2, (2, 3)],
    [(0, 3), (1, 3), (2, 3), 3],
]
# The inner octahedron has three diagonals joining midpoints of opposite edges.
_DIAGONALS = [((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))]


def _octahedron(diag: int) -> list:
    a, b = _DIAGONALS[diag]
    (p, q), (r, s) = [d for i, d in enumerate(_DIAGONALS) if i != diag]
    ring = [p, r, q, s]
    return [[a, b, ring[i], ring[(i + 1) % 4]] for i in range(4)]


def _children(local: list, cells: np.ndarray, mid: dict) -> np.ndarray:
    cols = [mid[p] if isinstance(p, tuple) else cells[:, p] for p in local]
    return np.column_stack(cols)


def refine_uniform(mesh: Mesh) -> tuple[Mesh, Prolongation]:
    """Red refinement: 2, 4 or 8 children per cell in 1D, 2D, 3D.

    In 3D the inner octahedron of each tetrahedron is cut along its shortest
    diagonal; ties go to the first diagonal in the order (01|23), (02|13),
    (03|12) of local edge pairs.  On the Kuhn meshes this keeps the children
    congruent to the cells of the generator at twice the resolution.
    """
    nv = mesh.n_vertices
    edges = mesh.edges()
    key = edges[:, 0] * nv + edges[:, 1]
    vertices = np.vstack([mesh.vertices, 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])])
    parents = np.vstack([np.column_stack([np.arange(nv), np.arange(nv)]), edges])

    c = mesh.cells
    d = mesh.dim
    mid = {}
    for a, b in itertools.combinations(range(d + 1), 2):
        k = np.minimum(c[:, a], c[:, b]) * nv + np.maximum(c[:, a], c[:, b])
        mid[(a, b)] = nv + np.searchsorted(key, k)

    if d < 3:
        pattern = _RED_1D if d == 1 else _RED_2D
        children = [_children(ch, c, mid) for ch in pattern]
        cells = np.stack(children, axis=1).reshape(-1, d + 1)
    else:
        lengths = np.column_stack([
            np.linalg.norm(vertices[mid[a]] - vertices[mid[b]], axis=1) for a, b in _DIAGONALS
        ])
        # tolerance so that geometric ties resolve by index, not rounding
        shortest = lengths.min(axis=1, keepdims=True)
        choice = np.argmax(lengths <= shortest * (1 + 1e-10), axis=1)
        cells = np.empty((len(c), 8, 4), dtype=np.int64)
        for i, ch in enumerate(_CORNERS_3D):
            cells[:, i] = _children(ch, c, mid)
        for diag in range(3):
            sel = choice == diag
            sub = {p: v[sel] for p, v in mid.items()}
            for i, ch in enumerate(_octahedron(diag)):
                cells[sel, 4 + i] = _children(ch, c[sel], sub)
        cells = cells.reshape(-1, 4)
    fine = Mesh(vertices, _orient(vertices, cells), mesh.domain_tag, mesh.level + 1)
    return fine, Prolongation(mesh.level, mesh.level + 1, parents)


def mesh_size(mesh: Mesh) -> float:
    """Maximal cell diameter (longest edge for simplices)."""
    x = mesh.vertices[mesh.cells]
    d = mesh.dim
    return max(
        float(np.linalg.norm(x[:, a] - x[:, b], axis=1).max())
        for a, b in itertools.combinations(range(d + 1), 2)
    )


def quality_ratio(mesh: Mesh) -> float:
    """max cell diameter / min inscribed-ball diameter."""
    x = mesh.vertices[mesh.cells]
    d = mesh.dim
    vol = np.abs(mesh.cell_volumes())
    if d == 1:
        return float(vol.max() / vol.min())
    facet_area = np.zeros(len(vol))
    for i in range(d + 1):
        f = np.delete(x, i, axis=1)
        e = f[:, 1:] - f[:, :1]
        if d == 2:
            facet_area += np.linalg.norm(e[:, 0], axis=1)
        else:
            facet_area += 0.5 * np.linalg.norm(np.cross(e[:, 0], e[:, 1]), axis=1)
    inradius = d * vol / facet_area
    return mesh_size(mesh) / float(2 * inradius.min())


def contains(domain: str, points: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Whether points lie in the closed domain."""
    p = np.asarray(points)
    if domain in ("interval", "unit_square", "unit_cube"):
        return np.all((p >= -tol) & (p <= 1 + tol), axis=1)
    box = np.all((p >= -1 - tol) & (p <= 1 + tol), axis=1)
    return box & ~np.all(p > tol, axis=1)
