import math
import warnings
from dataclasses import replace

import numpy as np
import pytest

from llbfem.mesh import interval_mesh, unit_cube_mesh, unit_square_mesh
from llbfem.presets import PRESETS, get_preset
from llbfem.scheme import (SchemeParams, SolverOptions, StepError, TimeGrid, check_time_step, init_state,
                           inverse_factor, iterate, run, step)
from llbfem.verification import constant_field_trajectory, dense_oracle_step

SIM1 = PRESETS["sim1"].params


def const(c):
    return lambda p: np.tile(np.asarray(c, dtype=float), (len(p), 1))


@pytest.mark.parametrize("kw", [dict(kappa1=0.0), dict(kappa2=-1.0), dict(mu=-0.1), dict(epsilon=-1e-3),
                                dict(gamma=math.inf), dict(kappa1=math.nan)])
def test_params_validation(kw):
    base = dict(kappa1=1.0, kappa2=1.0, gamma=0.0, mu=1.0, epsilon=0.0)
    with pytest.raises(ValueError):
        SchemeParams(**{**base, **kw})


@pytest.mark.parametrize("T, N", [(0.0, 10), (1.0, 0), (-1.0, 3), (1.0, 2.5)])
def test_time_grid_validation(T, N):
    with pytest.raises(ValueError):
        TimeGrid(T, N)


def test_time_grid_step():
    g = TimeGrid(0.5, 200)
    assert g.k == 2.5e-3
    assert g.t(200) == pytest.approx(0.5, abs=1e-15)


def test_inverse_factor_and_warning():
    assert inverse_factor(0.1, 1) == 1.0
    assert inverse_factor(0.1, 2) == pytest.approx(math.sqrt(math.log(10)))
    assert inverse_factor(0.25, 3) == 2.0
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert check_time_step(unit_square_mesh(8), 2.5e-3)
    with pytest.warns(UserWarning):
        assert not check_time_step(unit_cube_mesh(64), 1.0)


def test_zero_initial_data_stays_zero():
    m = unit_square_mesh(4)
    s = init_state(m, const([0, 0, 0]), SIM1)
    for _ in range(3):
        s = step(s, SIM1, 0.01)
    assert not s.u.any() and s.j == 3


@pytest.mark.parametrize("mesh", [interval_mesh(4), unit_square_mesh(3), unit_cube_mesh(1)])
def test_constant_field_reduces_to_ode(mesh):
    c0 = [0.3, -1.2, 0.7]
    k, N = 0.05, 6
    expected = constant_field_trajectory(np.array(c0), SIM1, k, N)
    s = init_state(mesh, const(c0), SIM1)
    for j in range(1, N + 1):
        s = step(s, SIM1, k)
        np.testing.assert_allclose(s.u.reshape(-1, 3), np.tile(expected[j], (mesh.n_vertices, 1)), atol=1e-10)


def test_step_matches_dense_oracle():
    m = unit_square_mesh(3)
    rng = np.random.default_rng(11)
    for name in ("sim1", "sim3", "sim4"):
        params = PRESETS[name].params
        s = replace(init_state(m, const([0, 0, 0])), u=rng.standard_normal(3 * m.n_vertices))
        np.testing.assert_allclose(step(s, params, 2.5e-3).u, dense_oracle_step(m, params, 2.5e-3, s.u),
                                   atol=1e-10)


def test_step_counts_and_times():
    m = unit_square_mesh(2)
    states = list(iterate(init_state(m, PRESETS["sim1"].u0), SIM1, TimeGrid(0.1, 4)))
    assert [s.j for s in states] == [0, 1, 2, 3, 4]
    assert states[-1].t == pytest.approx(0.1)


def test_run_snapshots_and_observers():
    m = unit_square_mesh(4)
    seen = []
    traj = run(m, SIM1, TimeGrid(0.1, 10), PRESETS["sim1"].u0, observers=[lambda a, b: seen.append((a.j, b.j))],
               snapshot_stride=4)
    assert seen == [(j, j + 1) for j in range(10)]
    assert sorted(traj.snapshots) == [0, 4, 8, 10]
    assert len(traj.norms) == 11
    np.testing.assert_allclose(traj.times, np.linspace(0, 0.1, 11), atol=1e-15)
    assert traj.final.j == 10
    assert len(run(m, SIM1, TimeGrid(0.1, 3), PRESETS["sim1"].u0, keep_all=True).snapshots) == 4


def test_solver_failure_raises_step_error():
    m = unit_square_mesh(8)
    s = init_state(m, PRESETS["sim1"].u0)
    with pytest.raises(StepError) as info:
        step(s, SIM1, 0.05, SolverOptions(tol=1e-16, max_iter=1, preconditioner="jacobi"))
    assert info.value.step == 1


def test_jacobi_and_lu_agree():
    m = unit_square_mesh(4)
    s = init_state(m, PRESETS["sim1"].u0)
    a = step(s, SIM1, 2.5e-3, SolverOptions(preconditioner="lu")).u
    b = step(s, SIM1, 2.5e-3, SolverOptions(preconditioner="jacobi")).u
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_get_preset():
    p = get_preset("sim3")
    assert p.params.kappa1 == 0.02 and p.params.gamma == 0.05
    assert get_preset("sim4").params.epsilon == 0.0
    with pytest.raises(ValueError):
        get_preset("sim7")
