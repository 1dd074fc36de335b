import numpy as np
import pytest

from llbfem.mesh import unit_square_mesh
from llbfem.scheme import SchemeParams
from llbfem.verification import (CosineField, OracleReport, constant_field_trajectory, dense_oracle_step,
                                 exact_errors, oracle_suite)


def test_oracle_report_flag():
    assert OracleReport("a", 1e-12, 1e-10).passed
    assert not OracleReport("b", 1.0, 1e-10).passed
    assert str(OracleReport("a", 0.0, 1.0)).startswith("PASS")


def test_dense_oracle_size_limit():
    m = unit_square_mesh(20)
    with pytest.raises(ValueError):
        dense_oracle_step(m, SchemeParams(1, 1, 0, 0), 0.1, np.zeros(3 * m.n_vertices))


def test_dense_oracle_pure_decay_of_constant():
    m = unit_square_mesh(2)
    p = SchemeParams(kappa1=1.0, kappa2=2.0, gamma=7.0, mu=0.0)
    u = np.tile([1.0, 2.0, 3.0], m.n_vertices)
    np.testing.assert_allclose(dense_oracle_step(m, p, 0.1, u), u / 1.2, atol=1e-13)


def test_constant_field_recurrence():
    p = SchemeParams(kappa1=1.0, kappa2=1.0, gamma=0.0, mu=1.0)
    traj = constant_field_trajectory(np.array([1.0, 0.0, 0.0]), p, 0.5, 2)
    assert traj[1, 0] == pytest.approx(0.5)
    assert traj[2, 0] == pytest.approx(0.5 / (1 + 0.5 * 1.25))


def test_cosine_field_derivatives():
    f = CosineField([[(2.0, 1.0, (1, 2))], [], [(1.0, 0.0, (0, 1))]])
    p = np.array([[0.3, 0.7]])
    h = 1e-6
    g = f.grad(0.2, p)[0]
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        fd = (f(0.2, p + e) - f(0.2, p - e))[0] / (2 * h)
        np.testing.assert_allclose(g[:, i], fd, atol=1e-7)
    dt = (f(0.2 + h, p) - f(0.2 - h, p))[0] / (2 * h)
    np.testing.assert_allclose(f._eval(0.2, p, "dt")[0], dt, atol=1e-7)
    with pytest.raises(ValueError):
        CosineField([[], []])


def test_exact_errors_zero_for_p1_exact_field():
    m = unit_square_mesh(3)
    f = CosineField([[], [], []])
    assert exact_errors(m, np.zeros(3 * m.n_vertices), f, 0.0) == (0.0, 0.0)


def test_oracle_suite_small():
    reports = oracle_suite(seed=3, cases=4)
    assert all(r.passed for r in reports), [str(r) for r in reports]
