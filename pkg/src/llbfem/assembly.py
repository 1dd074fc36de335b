"""Assembly of the P1 weak-form operators.

Vector-valued nodal fields are flat arrays of length ``3V`` in vertex-major
layout ``(u0x, u0y, u0z, u1x, ...)``.  Scalar operators (mass, stiffness,
weighted mass) are assembled once as ``V x V`` matrices and expanded with
:func:`blockdiag3`; the cross-product operator couples components and is
assembled directly at ``3V x 3V``.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .linalg import solve
from .quadrature import physical_points, simplex_rule


def as_field(mesh, w) -> np.ndarray:
    """Validate a flat nodal field against ``mesh`` and return it as float array."""
    w = np.asarray(w, dtype=float)
    if w.ndim == 2:
        w = w.reshape(-1)
    if w.shape != (3 * mesh.n_vertices,):
        raise ValueError(f"field of length {w.size} does not live on a mesh with {mesh.n_vertices} vertices")
    return w


def blockdiag3(A) -> sp.csr_matrix:
    """Expand a scalar ``V x V`` matrix identically over three components."""
    return sp.kron(A, sp.identity(3, format="csr"), format="csr")


def _scatter(mesh, local: np.ndarray) -> sp.csr_matrix:
    """Sum per-cell ``(C, d+1, d+1)`` blocks into a global CSR matrix."""
    c = mesh.cells
    n = c.shape[1]
    rows = np.repeat(c, n, axis=1).ravel()
    cols = np.tile(c, (1, n)).ravel()
    nv = mesh.n_vertices
    A = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(nv, nv)).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def assemble_mass(mesh) -> sp.csr_matrix:
    """Consistent mass matrix ``M_ab = int phi_a phi_b``."""
    d = mesh.dim
    vol = mesh.cell_volumes()
    ref = (np.ones((d + 1, d + 1)) + np.eye(d + 1)) / ((d + 1) * (d + 2))
    return _scatter(mesh, vol[:, None, None] * ref[None])


def local_stiffness(mesh) -> np.ndarray:
    """Per-cell ``|K| grad(phi_a) . grad(phi_b)``, shape (C, d+1, d+1)."""
    g = mesh.barycentric_gradients()
    return mesh.cell_volumes()[:, None, None] * np.einsum("cad,cbd->cab", g, g)


def assemble_stiffness(mesh) -> sp.csr_matrix:
    """Stiffness matrix ``S_ab = int grad(phi_a) . grad(phi_b)``."""
    return _scatter(mesh, local_stiffness(mesh))


def skew(v: np.ndarray) -> np.ndarray:
    """Matrices ``[v]_x`` with ``[v]_x @ u = v x u``; ``v`` of shape (..., 3)."""
    z = np.zeros(v.shape[:-1])
    x, y, w = v[..., 0], v[..., 1], v[..., 2]
    return np.stack([
        np.stack([z, -w, y], axis=-1),
        np.stack([w, z, -x], axis=-1),
        np.stack([-y, x, z], axis=-1),
    ], axis=-2)


def assemble_cross(mesh, w) -> sp.csr_matrix:
    """Matrix ``C(w)`` with ``v^T C(w) u = <w x grad u, grad v>``.

    The bilinear form is ``sum_i int (w x d_i u) . d_i v``.  Since the
    gradients are constant per cell and ``w`` is linear, the node block
    ``(a, b)`` on cell ``K`` is exactly ``s_ab [w_K]_x`` where ``s`` is the
    local stiffness and ``w_K`` the vertex average of ``w`` on ``K``.
    Rows index the test function, columns the trial function.
    """
    w = as_field(mesh, w).reshape(-1, 3)
    c = mesh.cells
    n = c.shape[1]
    wbar = w[c].mean(axis=1)
    blocks = local_stiffness(mesh)[:, :, :, None, None] * skew(wbar)[:, None, None, :, :]
    # (cell, a, b, alpha, beta) -> global (3a+alpha, 3b+beta)
    comp = np.arange(3)
    rows = 3 * c[:, :, None, None, None] + comp[None, None, None, :, None]
    cols = 3 * c[:, None, :, None, None] + comp[None, None, None, None, :]
    rows, cols = np.broadcast_arrays(rows, cols, blocks)[:2]
    N = 3 * mesh.n_vertices
    C = sp.coo_matrix((blocks.ravel(), (rows.ravel(), cols.ravel())), shape=(N, N)).tocsr()
    C.sum_duplicates()
    C.sort_indices()
    return C


def _shape_values(rule) -> np.ndarray:
    return rule.points  # barycentric coordinates are the P1 shape values


def assemble_weighted_mass(mesh, w) -> sp.csr_matrix:
    """``W(w)_ab = int |w|^2 phi_a phi_b`` by the degree-4 rule (exact)."""
    w = as_field(mesh, w).reshape(-1, 3)
    rule = simplex_rule(mesh.dim, 4)
    phi = _shape_values(rule)  # (q, d+1)
    _, wq = physical_points(mesh, rule)  # (C, q)
    wk = np.einsum("qi,cik->cqk", phi, w[mesh.cells])
    weight = wq * np.einsum("cqk,cqk->cq", wk, wk)
    local = np.einsum("cq,qa,qb->cab", weight, phi, phi)
    return _scatter(mesh, local)


def load_vector(mesh, f, degree: int = 6) -> np.ndarray:
    """``b_{a,alpha} = int f_alpha phi_a`` for ``f(points (n, d)) -> (n, 3)``."""
    rule = simplex_rule(mesh.dim, degree)
    pts, wq = physical_points(mesh, rule)
    vals = np.asarray(f(pts.reshape(-1, mesh.dim)), dtype=float).reshape(*wq.shape, 3)
    local = np.einsum("cq,qa,cqk->cak", wq, rule.points, vals)
    b = np.zeros((mesh.n_vertices, 3))
    np.add.at(b, mesh.cells, local)
    return b.reshape(-1)


def interpolate(mesh, f) -> np.ndarray:
    """Nodal interpolant of ``f(points (n, d)) -> (n, 3)``."""
    return np.asarray(f(mesh.vertices), dtype=float).reshape(-1)


def l2_project(mesh, f, M=None, tol: float = 1e-13) -> np.ndarray:
    """L2 projection onto P1: solve ``M u_c = b_c`` per component."""
    if M is None:
        M = assemble_mass(mesh)
    b = load_vector(mesh, f).reshape(-1, 3)
    u = np.empty_like(b)
    for k in range(3):
        u[:, k], _ = solve(M, b[:, k], tol=tol)
    return u.reshape(-1)


def compose_system(M, S, C, W, params, k: float):
    """Per-step matrix and right-hand-side operator.

    ``A = blockdiag3(M + eps S + k kappa1 S + k kappa2 M + k kappa2 mu W)
    + gamma k C`` and ``rhs = blockdiag3(M + eps S) @ u_prev``.
    """
    nv = M.shape[0]
    if S.shape != (nv, nv) or W.shape != (nv, nv) or C.shape != (3 * nv, 3 * nv):
        raise ValueError("inconsistent operator dimensions")
    p = params
    lhs_rhs = M + p.epsilon * S
    scalar = lhs_rhs + (k * p.kappa1) * S + (k * p.kappa2) * M + (k * p.kappa2 * p.mu) * W
    A = blockdiag3(scalar) + (p.gamma * k) * C
    A = A.tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A, blockdiag3(lhs_rhs)
