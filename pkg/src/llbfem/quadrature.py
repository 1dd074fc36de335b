"""Quadrature rules on the reference simplex.

The reference simplex is ``{x >= 0, sum(x) <= 1}`` with measure ``1/d!``.
Points are stored in barycentric coordinates, so a rule is applied on a
physical cell by ``x = lam @ cell_vertices`` and scaling weights by
``d! * |K|``.

Low degrees use the classical closed rules (vertex and edge-midpoint rules
in 2D, the 4-point rule in 3D).  Degrees 4 and 6 in 2D/3D use Stroud's
conical product of Gauss-Jacobi rules, which has strictly positive weights.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

SUPPORTED_DEGREES = (1, 2, 4, 6)


@dataclass(frozen=True)
class QuadRule:
    dim: int
    degree: int
    points: np.ndarray  # (q, d+1) barycentric
    weights: np.ndarray  # (q,), sum = 1/d!

    @property
    def cartesian(self) -> np.ndarray:
        """Points in reference coordinates, shape (q, d)."""
        return self.points[:, 1:]


def _from_cartesian(x: np.ndarray) -> np.ndarray:
    return np.column_stack([1.0 - x.sum(axis=1), x])


def _gauss_jacobi01(n: int, alpha: float):
    # nodes/weights on [0,1] for weight (1-t)^alpha
    t, w = roots_jacobi(n, alpha, 0.0)
    return (t + 1) / 2, w / 2 ** (alpha + 1)


def _conical(dim: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Stroud conical product rule, exact to degree 2n-1."""
    if dim == 1:
        t, w = _gauss_jacobi01(n, 0.0)
        return t[:, None], w
    if dim == 2:
        s, ws = _gauss_jacobi01(n, 1.0)
        t, wt = _gauss_jacobi01(n, 0.0)
        S, T = np.meshgrid(s, t, indexing="ij")
        x = np.column_stack([S.ravel(), ((1 - S) * T).ravel()])
        return x, np.outer(ws, wt).ravel()
    r, wr = _gauss_jacobi01(n, 2.0)
    s, ws = _gauss_jacobi01(n, 1.0)
    t, wt = _gauss_jacobi01(n, 0.0)
    R, S, T = np.meshgrid(r, s, t, indexing="ij")
    x = np.column_stack([
        R.ravel(),
        ((1 - R) * S).ravel(),
        ((1 - R) * (1 - S) * T).ravel(),
    ])
    w = (wr[:, None, None] * ws[None, :, None] * wt[None, None, :]).ravel()
    return x, w


@lru_cache(maxsize=None)
def simplex_rule(dim: int, degree: int) -> QuadRule:
    """Rule on the reference ``dim``-simplex, exact up to total ``degree``."""
    if dim not in (1, 2, 3) or degree not in SUPPORTED_DEGREES:
        raise ValueError(f"unsupported quadrature (dim={dim}, degree={degree})")
    measure = 1.0 / math.factorial(dim)
    if degree == 1:
        lam = np.eye(dim + 1)
        w = np.full(dim + 1, measure / (dim + 1))
    elif degree == 2 and dim == 2:
        lam = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
        w = np.full(3, measure / 3)
    elif degree == 2 and dim == 3:
        a = (5.0 - math.sqrt(5.0)) / 20.0
        b = 1.0 - 3.0 * a
        lam = np.full((4, 4), a) + (b - a) * np.eye(4)
        w = np.full(4, measure / 4)
    else:
        x, w = _conical(dim, degree // 2 + 1)
        lam = _from_cartesian(x)
    lam.setflags(write=False)
    w.setflags(write=False)
    return QuadRule(dim, degree, lam, w)


def physical_points(mesh, rule: QuadRule) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature points (C, q, d) and weights (C, q) on every cell."""
    x = mesh.vertices[mesh.cells]
    pts = np.einsum("qi,cid->cqd", rule.points, x)
    scale = math.factorial(mesh.dim) * mesh.cell_volumes()
    return pts, scale[:, None] * rule.weights[None, :]


def integrate_on_cell(mesh, cell: int, rule: QuadRule, integrand) -> float:
    """Integrate ``integrand(points (q, d)) -> (q,)`` over one cell."""
    if rule.dim != mesh.dim:
        raise ValueError("rule dimension does not match mesh dimension")
    x = mesh.vertices[mesh.cells[cell]]
    pts = rule.points @ x
    vol = mesh.cell_volumes()[cell]
    return float(math.factorial(mesh.dim) * vol * np.dot(rule.weights, integrand(pts)))


def integrate(mesh, rule: QuadRule, integrand) -> float:
    """Integrate a pointwise function over the whole mesh."""
    pts, w = physical_points(mesh, rule)
    vals = integrand(pts.reshape(-1, mesh.dim)).reshape(w.shape)
    return float(np.sum(w * vals))
