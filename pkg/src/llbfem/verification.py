"""Independent oracles for the time-stepping scheme.

:func:`dense_oracle_step` rebuilds one step from scratch, without any of
the sparse assembly code: hat functions come from inverting the vertex
coordinate matrix of each cell, every weak-form term is integrated by
quadrature at the level of individual test/trial pairs, and the dense
system is solved by LU.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .linalg import dense_lu_solve
from .mesh import make_mesh
from .quadrature import simplex_rule
from .presets import PRESETS
from .scheme import SchemeParams, TimeGrid, init_state, step, step_with_forcing
from .studies import compute_rate

_LEVI_CIVITA = np.zeros((3, 3, 3))
for _a, _b, _c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    _LEVI_CIVITA[_a, _b, _c] = 1.0
    _LEVI_CIVITA[_a, _c, _b] = -1.0


@dataclass(frozen=True)
class OracleReport:
    name: str
    max_abs_discrepancy: float
    threshold: float
    passed: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "passed", bool(self.max_abs_discrepancy <= self.threshold))

    def __str__(self):
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag} {self.name}: {self.max_abs_discrepancy:.3e} (threshold {self.threshold:.1e})"


def _hat_coefficients(x: np.ndarray) -> np.ndarray:
    """Rows ``(c0, c)`` with ``phi_a(y) = c0 + c . y`` on the simplex ``x``."""
    V = np.hstack([np.ones((x.shape[0], 1)), x])
    return np.linalg.inv(V).T


def dense_oracle_step(mesh, params: SchemeParams, k: float, u_prev, max_vertices: int = 200) -> np.ndarray:
    """Next state of the scheme by dense per-entry quadrature and LU."""
    nv = mesh.n_vertices
    if nv > max_vertices:
        raise ValueError(f"dense oracle limited to {max_vertices} vertices, mesh has {nv}")
    d = mesh.dim
    u_prev = np.asarray(u_prev, dtype=float).reshape(nv, 3)
    rule = simplex_rule(d, 4)
    ref = rule.cartesian
    n = 3 * nv
    lhs = np.zeros((n, n))
    rhs_mat = np.zeros((n, n))
    for cell in mesh.cells:
        x = mesh.vertices[cell]
        B = (x[1:] - x[0]).T
        jac = abs(np.linalg.det(B)) if d > 1 else abs(B[0, 0])
        coef = _hat_coefficients(x)
        grads = coef[:, 1:]
        for xi, wq in zip(ref, rule.weights):
            y = x[0] + B @ xi
            phi = coef[:, 0] + grads @ y
            w = phi @ u_prev[cell]
            w2 = w @ w
            dw = wq * jac
            cross = np.einsum("abc,c->ab", _LEVI_CIVITA, w)  # (w x e_beta)_alpha = cross[beta, alpha]
            for a, A in enumerate(cell):
                for b, Bv in enumerate(cell):
                    mass = phi[a] * phi[b] * dw
                    stiff = grads[a] @ grads[b] * dw
                    for alpha in range(3):
                        r, c = 3 * A + alpha, 3 * Bv + alpha
                        rhs_mat[r, c] += mass + params.epsilon * stiff
                        lhs[r, c] += (mass + params.epsilon * stiff + k * params.kappa1 * stiff
                                      + k * params.kappa2 * mass + k * params.kappa2 * params.mu * w2 * mass)
                        for beta in range(3):
                            lhs[3 * A + alpha, 3 * Bv + beta] += params.gamma * k * cross[beta, alpha] * stiff
    return dense_lu_solve(lhs, rhs_mat @ u_prev.reshape(-1))


def constant_field_trajectory(c0, params: SchemeParams, k: float, N: int) -> np.ndarray:
    """``c_j = c_{j-1} / (1 + k kappa2 (1 + mu |c_{j-1}|^2))`` for ``j <= N``."""
    out = np.empty((N + 1, 3))
    out[0] = c0
    for j in range(1, N + 1):
        c = out[j - 1]
        out[j] = c / (1.0 + k * params.kappa2 * (1.0 + params.mu * (c @ c)))
    return out


class CosineField:
    """Vector field whose components are sums of ``a exp(-r t) prod_i cos(m_i pi x_i)``.

    Every such mode has zero normal derivative on the faces of the unit box,
    so homogeneous Neumann data hold exactly.

    Parameters
    ----------
    modes : sequence of three lists of ``(amplitude, rate, wavenumbers)``
    """

    def __init__(self, modes):
        if len(modes) != 3:
            raise ValueError("need modes for three components")
        self.modes = [[(float(a), float(r), tuple(m)) for a, r, m in comp] for comp in modes]

    def _eval(self, t, p, kind):
        p = np.atleast_2d(p)
        out = np.zeros((len(p), 3)) if kind != "grad" else np.zeros((len(p), 3, p.shape[1]))
        for c, comp in enumerate(self.modes):
            for a, r, m in comp:
                m = np.array(m[:p.shape[1]] + (0,) * (p.shape[1] - len(m)), dtype=float)
                arg = np.pi * m * p
                cos = np.cos(arg)
                amp = a * math.exp(-r * t)
                if kind == "grad":
                    for i in range(p.shape[1]):
                        others = np.prod(np.delete(cos, i, axis=1), axis=1)
                        out[:, c, i] += -amp * np.pi * m[i] * np.sin(arg[:, i]) * others
                    continue
                val = amp * np.prod(cos, axis=1)
                lap = -(np.pi ** 2) * float(m @ m)
                factor = {"u": 1.0, "dt": -r, "lap": lap, "dt_lap": -r * lap}[kind]
                out[:, c] += factor * val
        return out

    def __call__(self, t, p):
        return self._eval(t, p, "u")

    def grad(self, t, p):
        return self._eval(t, p, "grad")

    def forcing(self, params: SchemeParams):
        """Source making this field an exact solution of the regularised equation."""
        def f(t, p):
            u = self._eval(t, p, "u")
            lap = self._eval(t, p, "lap")
            return (self._eval(t, p, "dt") - params.epsilon * self._eval(t, p, "dt_lap")
                    - params.kappa1 * lap - params.gamma * np.cross(u, lap)
                    + params.kappa2 * (1.0 + params.mu * np.einsum("ik,ik->i", u, u))[:, None] * u)
        return f


def exact_errors(mesh, u_h, exact: CosineField, t: float) -> tuple[float, float]:
    """``|u_h - u*|_{L2}`` and ``|u_h - u*|_{H1}`` by the degree-6 rule."""
    rule = simplex_rule(mesh.dim, 6)
    x = mesh.vertices[mesh.cells]
    pts = np.einsum("qi,cid->cqd", rule.points, x)
    w = math.factorial(mesh.dim) * mesh.cell_volumes()[:, None] * rule.weights[None, :]
    uc = np.asarray(u_h).reshape(-1, 3)[mesh.cells]
    uq = np.einsum("qi,cik->cqk", rule.points, uc)
    g = mesh.barycentric_gradients()
    gh = np.einsum("cad,cak->ckd", g, uc)
    flat = pts.reshape(-1, mesh.dim)
    eu = uq - exact(t, flat).reshape(uq.shape)
    eg = gh[:, None] - exact.grad(t, flat).reshape(*uq.shape, mesh.dim)
    l2 = float(np.sum(w * np.einsum("cqk,cqk->cq", eu, eu)))
    semi = float(np.sum(w * np.einsum("cqkd,cqkd->cq", eg, eg)))
    return math.sqrt(l2), math.sqrt(l2 + semi)


@dataclass(frozen=True)
class MMSCase:
    name: str
    domain: str
    params: SchemeParams
    exact: CosineField
    T: float
    ns: tuple = (4, 8, 16, 32)
    dt_factor: float = 0.25  # k = dt_factor / n^2, so time error ~ h^2
    windows: dict = field(default_factory=lambda: {"l2": (2.0, 0.2), "h1": (1.0, 0.2)})


def mms_errors(case: MMSCase) -> dict[str, list[float]]:
    """Max-over-time errors against the exact solution for each resolution."""
    errs = {"l2": [], "h1": []}
    f = case.exact.forcing(case.params)
    for n in case.ns:
        mesh = make_mesh(case.domain, n)
        N = max(1, math.ceil(case.T * n * n / case.dt_factor))
        grid = TimeGrid(case.T, N)
        state = init_state(mesh, lambda p: case.exact(0.0, p), case.params)
        e_l2 = e_h1 = 0.0
        for _ in range(N):
            state = step_with_forcing(state, case.params, grid.k, f)
            l2, h1 = exact_errors(mesh, state.u, case.exact, state.t)
            e_l2, e_h1 = max(e_l2, l2), max(e_h1, h1)
        errs["l2"].append(e_l2)
        errs["h1"].append(e_h1)
    return errs


LINEAR = SchemeParams(kappa1=1.0, kappa2=1.0, gamma=0.0, mu=0.0, epsilon=0.0)
FULL = SchemeParams(kappa1=1.0, kappa2=2.0, gamma=5.0, mu=1.0, epsilon=1e-3)

DEFAULT_CASES = (
    MMSCase("mms-linear-interval", "interval", LINEAR,
            CosineField([[(1.0, 1.0, (1,))], [], []]), 0.1, ns=(8, 16, 32, 64)),
    MMSCase("mms-linear-square", "unit_square", LINEAR,
            CosineField([[(1.0, 1.0, (1, 0))], [], []]), 0.1),
    MMSCase("mms-full-square", "unit_square", FULL,
            CosineField([[(1.0, 1.0, (1, 1))], [(1.0, 2.0, (2, 0))], []]), 0.1),
)


def manufactured_suite(cases=DEFAULT_CASES) -> list[OracleReport]:
    """Refinement sweep per case; one report per (case, norm) rate window."""
    reports = []
    for case in cases:
        errs = mms_errors(case)
        if all(v == 0 for seq in errs.values() for v in seq):
            reports.append(OracleReport(f"{case.name} exact zero", 0.0, 0.0))
            continue
        rates = compute_rate(errs)
        for norm, (target, width) in case.windows.items():
            reports.append(OracleReport(f"{case.name} {norm} rate {rates[norm]:.3f}",
                                        abs(rates[norm] - target), width))
    return reports


def oracle_suite(seed: int = 0, cases: int = 20) -> list[OracleReport]:
    """Random single steps against :func:`dense_oracle_step` plus constant-field reductions."""
    rng = np.random.default_rng(seed)
    meshes = [make_mesh("unit_square", 2), make_mesh("unit_square", 4), make_mesh("unit_cube", 1),
              make_mesh("l_shape", 2), make_mesh("unit_cube", 2)]
    reports = []
    worst = 0.0
    for i in range(cases):
        mesh = meshes[i % len(meshes)]
        params = PRESETS["sim1" if i % 2 == 0 else "sim3"].params
        k = 2.5e-3
        u = rng.standard_normal(3 * mesh.n_vertices)
        state = init_state(mesh, lambda p: np.zeros((len(p), 3)), params)
        new = step(replace(state, u=u), params, k)
        ref = dense_oracle_step(mesh, params, k, u)
        worst = max(worst, float(np.abs(new.u - ref).max()))
    reports.append(OracleReport(f"dense oracle ({cases} random steps)", worst, 1e-10))

    params = SchemeParams(kappa1=5.0, kappa2=2.0, gamma=50.0, mu=1.0, epsilon=1e-3)
    c0 = np.array([1.0, -0.5, 0.25])
    k, N = 0.1, 5
    expected = constant_field_trajectory(c0, params, k, N)
    mesh = make_mesh("unit_square", 3)
    state = init_state(mesh, lambda p: np.tile(c0, (len(p), 1)), params)
    worst = 0.0
    for j in range(1, N + 1):
        state = step(state, params, k)
        worst = max(worst, float(np.abs(state.u.reshape(-1, 3) - expected[j]).max()))
    reports.append(OracleReport("constant-field recurrence", worst, 1e-9))
    return reports
