import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from llbfem.assembly import (as_field, assemble_cross, assemble_mass, assemble_stiffness, assemble_weighted_mass,
                             blockdiag3, compose_system, interpolate, l2_project, load_vector, skew)
from llbfem.mesh import interval_mesh, l_shape_mesh, unit_cube_mesh, unit_square_mesh
from llbfem.scheme import SchemeParams
from llbfem.verification import dense_oracle_step

MESHES = [interval_mesh(5), unit_square_mesh(3), l_shape_mesh(2), unit_cube_mesh(2)]


def field(mesh, f):
    return np.asarray(f(mesh.vertices), dtype=float).reshape(-1)


@pytest.mark.parametrize("mesh", MESHES)
def test_mass_properties(mesh):
    M = assemble_mass(mesh).toarray()
    np.testing.assert_allclose(M, M.T, atol=0)
    assert np.linalg.eigvalsh(M).min() > 0
    one = np.ones(mesh.n_vertices)
    assert abs(one @ M @ one - mesh.cell_volumes().sum()) <= 1e-13
    x = mesh.vertices[:, 0]
    # int x over the domain from the centroid moments
    centroid = mesh.vertices[mesh.cells].mean(axis=1)[:, 0]
    assert abs(one @ M @ x - centroid @ mesh.cell_volumes()) <= 1e-13


def test_mass_reference_triangle():
    m = unit_square_mesh(1)
    M = assemble_mass(m).toarray()
    # the diagonal vertices (0 and 3) are shared by both cells
    assert M[0, 0] == pytest.approx(2 * 0.5 / 6, abs=1e-16)
    assert M[1, 1] == pytest.approx(0.5 / 6, abs=1e-16)
    assert M[0, 3] == pytest.approx(2 * 0.5 / 12, abs=1e-16)


@pytest.mark.parametrize("mesh", MESHES)
def test_stiffness_properties(mesh):
    S = assemble_stiffness(mesh).toarray()
    np.testing.assert_allclose(S, S.T, atol=1e-15)
    np.testing.assert_allclose(S @ np.ones(mesh.n_vertices), 0, atol=1e-12)
    ev = np.linalg.eigvalsh(S)
    assert ev.min() > -1e-12
    assert (np.abs(ev) < 1e-10).sum() == 1
    # exact on linear functions: |grad(a.x)|^2 |Omega|
    a = np.arange(1, mesh.dim + 1, dtype=float)
    v = mesh.vertices @ a
    assert abs(v @ S @ v - (a @ a) * mesh.cell_volumes().sum()) <= 1e-11


def test_skew_matrix():
    rng = np.random.default_rng(0)
    v, u = rng.standard_normal((2, 5, 3))
    np.testing.assert_allclose(np.einsum("nij,nj->ni", skew(v), u), np.cross(v, u), atol=1e-15)


def test_cross_sign_convention():
    # w = e3, u = x e1, v = x e2: (e3 x e1) . e2 integrated over the unit square
    m = unit_square_mesh(4)
    C = assemble_cross(m, field(m, lambda p: np.tile([0.0, 0.0, 1.0], (len(p), 1))))
    u = field(m, lambda p: np.column_stack([p[:, 0], 0 * p[:, 0], 0 * p[:, 0]]))
    v = field(m, lambda p: np.column_stack([0 * p[:, 0], p[:, 0], 0 * p[:, 0]]))
    assert v @ C @ u == pytest.approx(1.0, abs=1e-14)
    assert u @ C @ v == pytest.approx(-1.0, abs=1e-14)


def test_cross_zero_field():
    m = unit_square_mesh(2)
    assert assemble_cross(m, np.zeros(3 * m.n_vertices)).count_nonzero() == 0


@pytest.mark.parametrize("mesh", [unit_square_mesh(2), unit_cube_mesh(1), interval_mesh(4)])
def test_cross_against_quadrature(mesh):
    """Compare with a per-cell degree-2 quadrature of (w x d_i u) . d_i v."""
    rng = np.random.default_rng(3)
    w = rng.standard_normal(3 * mesh.n_vertices)
    C = assemble_cross(mesh, w).toarray()
    g = mesh.barycentric_gradients()
    vol = mesh.cell_volumes()
    ref = np.zeros_like(C)
    W = w.reshape(-1, 3)
    for c, cell in enumerate(mesh.cells):
        wbar = W[cell].mean(axis=0)  # integral of a linear field over the cell / |K|
        for a, A in enumerate(cell):
            for b, B in enumerate(cell):
                s = vol[c] * g[c, a] @ g[c, b]
                for al in range(3):
                    for be in range(3):
                        e = np.zeros(3)
                        e[be] = 1.0
                        ref[3 * A + al, 3 * B + be] += s * np.cross(wbar, e)[al]
    np.testing.assert_allclose(C, ref, atol=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_cross_skew_and_linear(seed, a, b):
    m = unit_square_mesh(3)
    rng = np.random.default_rng(seed)
    w1, w2 = rng.standard_normal((2, 3 * m.n_vertices))
    C1 = assemble_cross(m, w1)
    assert abs(C1 + C1.T).max() <= 1e-13 * max(abs(C1).max(), 1e-300)
    lhs = assemble_cross(m, a * w1 + b * w2)
    rhs = a * C1 + b * assemble_cross(m, w2)
    assert abs(lhs - rhs).max() <= 1e-12 * (1 + abs(lhs).max())
    u = rng.standard_normal(3 * m.n_vertices)
    assert abs(u @ (C1 @ u)) <= 1e-12 * (1 + np.abs(u).sum() ** 2 * abs(C1).max())


@pytest.mark.parametrize("mesh", MESHES)
def test_weighted_mass(mesh):
    rng = np.random.default_rng(4)
    w = rng.standard_normal(3 * mesh.n_vertices)
    W = assemble_weighted_mass(mesh, w).toarray()
    np.testing.assert_allclose(W, W.T, atol=1e-14)
    assert np.linalg.eigvalsh(W).min() > -1e-12
    # constant unit field reduces to the mass matrix
    e = np.tile([0.6, 0.0, 0.8], mesh.n_vertices)
    np.testing.assert_allclose(assemble_weighted_mass(mesh, e).toarray(), assemble_mass(mesh).toarray(), atol=1e-15)
    # scaling is quadratic
    np.testing.assert_allclose(assemble_weighted_mass(mesh, 2 * w).toarray(), 4 * W, atol=1e-12)


def test_weighted_mass_quartic_integral():
    # int x^2 * 1 * 1 over the square for w = (x, 0, 0)
    m = unit_square_mesh(2)
    w = field(m, lambda p: np.column_stack([p[:, 0], 0 * p[:, 0], 0 * p[:, 0]]))
    one = np.ones(m.n_vertices)
    assert one @ assemble_weighted_mass(m, w) @ one == pytest.approx(1 / 3, abs=1e-14)


def test_as_field_mismatch():
    m = unit_square_mesh(2)
    with pytest.raises(ValueError):
        as_field(m, np.zeros(5))
    assert as_field(m, np.zeros((m.n_vertices, 3))).shape == (3 * m.n_vertices,)


def test_blockdiag3_layout():
    A = sp.csr_matrix(np.array([[1.0, 2.0], [3.0, 4.0]]))
    B = blockdiag3(A).toarray()
    assert B.shape == (6, 6)
    assert B[3 * 1 + 2, 3 * 0 + 2] == 3.0
    assert B[0, 1] == 0.0


@pytest.mark.parametrize("mesh", [unit_square_mesh(3), unit_cube_mesh(1)])
def test_l2_projection_reproduces_p1(mesh):
    def f(p):
        return np.column_stack([1 + p[:, 0], p[:, 1] - 2 * p[:, 0], 3 * np.ones(len(p))])

    np.testing.assert_allclose(l2_project(mesh, f), interpolate(mesh, f), atol=1e-11)


def test_load_vector_galerkin_orthogonality():
    m = unit_square_mesh(4)

    def f(p):
        return np.column_stack([np.sin(p[:, 0]), p[:, 1] ** 2, np.exp(p[:, 0] * p[:, 1])])

    u = l2_project(m, f)
    M = blockdiag3(assemble_mass(m))
    np.testing.assert_allclose(M @ u, load_vector(m, f), atol=1e-12)


def test_compose_system_matches_dense_oracle():
    m = unit_square_mesh(3)
    params = SchemeParams(kappa1=5.0, kappa2=2.0, gamma=50.0, mu=1.0, epsilon=1e-3)
    rng = np.random.default_rng(7)
    u = rng.standard_normal(3 * m.n_vertices)
    M, S = assemble_mass(m), assemble_stiffness(m)
    A, R = compose_system(M, S, assemble_cross(m, u), assemble_weighted_mass(m, u), params, 0.01)
    new = np.linalg.solve(A.toarray(), R @ u)
    np.testing.assert_allclose(new, dense_oracle_step(m, params, 0.01, u), atol=1e-12)


def test_compose_system_dimension_check():
    m = unit_square_mesh(2)
    M = assemble_mass(m)
    params = SchemeParams(1.0, 1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        compose_system(M, M, sp.identity(3), M, params, 0.1)
