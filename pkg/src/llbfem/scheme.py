"""Linear semi-implicit time stepping for the LLB equation and its
pseudo-parabolic regularisation.

One step solves, for ``u^j`` given ``u^{j-1}``,

    blockdiag3(M + eps S + k kappa1 S + k kappa2 M + k kappa2 mu W(u^{j-1})) u^j
        + gamma k C(u^{j-1}) u^j = blockdiag3(M + eps S) u^{j-1} (+ k F^j)

where ``F^j`` is an optional load vector for manufactured solutions.
``eps = 0`` gives the scheme for the unregularised equation.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, Sequence

import numpy as np

from . import assembly
from .diagnostics import NormSample, norm_sample
from .linalg import DEFAULT_MAX_ITER, DEFAULT_TOL, SolverError, solve
from .mesh import Mesh, mesh_size

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SchemeParams:
    kappa1: float
    kappa2: float
    gamma: float
    mu: float
    epsilon: float = 0.0

    def __post_init__(self):
        for name in ("kappa1", "kappa2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v!r}")
        # mu = 0 is allowed for the linear reductions used in verification
        for name in ("mu", "epsilon"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be nonnegative, got {v!r}")
        if not math.isfinite(self.gamma):
            raise ValueError(f"gamma must be finite, got {self.gamma!r}")


@dataclass(frozen=True)
class TimeGrid:
    T: float
    N: int

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        if not (math.isfinite(self.T) and self.T > 0):
            raise ValueError(f"T must be positive, got {self.T!r}")

    @property
    def k(self) -> float:
        return self.T / self.N

    def t(self, n: int) -> float:
        return n * self.k


@dataclass(frozen=True)
class SolverOptions:
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    preconditioner: str = "lu"


@dataclass(frozen=True, eq=False)
class SimState:
    mesh: Mesh
    j: int
    u: np.ndarray
    M: object
    S: object
    t: float = 0.0
    C: object = None
    W: object = None


class StepError(RuntimeError):
    def __init__(self, j: int, cause: SolverError):
        super().__init__(f"step {j}: {cause}")
        self.step = j
        self.report = cause.report


def inverse_factor(h: float, dim: int) -> float:
    """``1``, ``|log h|^(1/2)``, ``h^(-1/2)`` for d = 1, 2, 3."""
    if dim == 1:
        return 1.0
    if dim == 2:
        return math.sqrt(abs(math.log(h)))
    return h ** -0.5


def check_time_step(mesh: Mesh, k: float) -> bool:
    """Warn when ``k * l_h > 1``; the error estimates assume ``k l_h`` bounded."""
    value = k * inverse_factor(mesh_size(mesh), mesh.dim)
    if value > 1:
        warnings.warn(f"k*l_h = {value:.3g} > 1: outside the regime kl_h <~ 1 assumed by the error estimates",
                      stacklevel=2)
        return False
    return True


def init_state(mesh: Mesh, u0, params: SchemeParams | None = None) -> SimState:
    """Assemble M and S and L2-project the initial data ``u0(points) -> (n, 3)``."""
    M = assembly.assemble_mass(mesh)
    S = assembly.assemble_stiffness(mesh)
    u = assembly.l2_project(mesh, u0, M)
    return SimState(mesh, 0, u, M, S, 0.0)


def _advance(state: SimState, params: SchemeParams, k: float, load, solver: SolverOptions) -> SimState:
    mesh = state.mesh
    C = assembly.assemble_cross(mesh, state.u)
    W = assembly.assemble_weighted_mass(mesh, state.u)
    A, R = assembly.compose_system(state.M, state.S, C, W, params, k)
    b = R @ state.u
    if load is not None:
        b = b + k * load
    try:
        u, _ = solve(A, b, tol=solver.tol, max_iter=solver.max_iter, preconditioner=solver.preconditioner)
    except SolverError as exc:
        raise StepError(state.j + 1, exc) from exc
    return replace(state, j=state.j + 1, u=u, t=(state.j + 1) * k, C=C, W=W)


def step(state: SimState, params: SchemeParams, k: float, solver: SolverOptions = SolverOptions()) -> SimState:
    """Advance one time step (exactly one linear solve)."""
    return _advance(state, params, k, None, solver)


def step_with_forcing(state: SimState, params: SchemeParams, k: float, f: Callable | None,
                      solver: SolverOptions = SolverOptions()) -> SimState:
    """One step with a source ``f(t, points) -> (n, 3)`` evaluated at the new time."""
    if f is None:
        return step(state, params, k, solver)
    t = (state.j + 1) * k
    load = assembly.load_vector(state.mesh, lambda p: f(t, p))
    return _advance(state, params, k, load, solver)


def iterate(state: SimState, params: SchemeParams, grid: TimeGrid, forcing=None,
            solver: SolverOptions = SolverOptions()) -> Iterator[SimState]:
    """Yield the initial state and every subsequent one up to ``t = T``."""
    yield state
    for _ in range(grid.N):
        state = step_with_forcing(state, params, grid.k, forcing, solver)
        yield state


@dataclass
class Trajectory:
    mesh: Mesh
    params: SchemeParams
    grid: TimeGrid
    norms: list[NormSample] = field(default_factory=list)
    snapshots: dict[int, np.ndarray] = field(default_factory=dict)
    final: SimState | None = None

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.norms])


def run(mesh: Mesh, params: SchemeParams, grid: TimeGrid, u0,
        observers: Sequence[Callable] = (), snapshot_stride: int | None = None,
        keep_all: bool = False, forcing=None, solver: SolverOptions = SolverOptions()) -> Trajectory:
    """Run the scheme for ``grid.N`` steps.

    Norms are recorded at every step.  Nodal states are kept every
    ``snapshot_stride`` steps (always including the first and last) or at
    every step when ``keep_all``.  Each observer is called as
    ``observer(prev_state, state)`` after every step.
    """
    check_time_step(mesh, grid.k)
    stride = 1 if keep_all else (snapshot_stride or max(1, grid.N // 50))
    traj = Trajectory(mesh, params, grid)
    prev = None
    for state in iterate(init_state(mesh, u0, params), params, grid, forcing, solver):
        traj.norms.append(norm_sample(mesh, state.u, state.t, state.M, state.S))
        if state.j % stride == 0 or state.j == grid.N:
            traj.snapshots[state.j] = state.u
        if prev is not None:
            for obs in observers:
                obs(prev, state)
        prev = state
    traj.final = prev
    log.info("run finished: %d steps, |u|_L2 %.4g -> %.4g", grid.N, traj.norms[0].l2, traj.norms[-1].l2)
    return traj
