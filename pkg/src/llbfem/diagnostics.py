"""Discrete norms, the per-step energy balance and decay envelopes."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .assembly import as_field, assemble_mass, assemble_stiffness
from .quadrature import physical_points, simplex_rule


@dataclass(frozen=True)
class NormSample:
    t: float
    l2: float
    h1_semi: float
    h1: float
    linf: float
    l4: float


def _quadform(A, u) -> float:
    u = u.reshape(-1, 3)
    return float(max(0.0, np.einsum("ik,ik->", u, A @ u)))


def norm_l2(mesh, u, M=None) -> float:
    """``sqrt(u^T blockdiag3(M) u)``."""
    u = as_field(mesh, u)
    return math.sqrt(_quadform(assemble_mass(mesh) if M is None else M, u))


def seminorm_h1(mesh, u, S=None) -> float:
    """``sqrt(u^T blockdiag3(S) u)``."""
    u = as_field(mesh, u)
    return math.sqrt(_quadform(assemble_stiffness(mesh) if S is None else S, u))


def norm_linf(mesh, u) -> float:
    """Largest Euclidean length of the vertex values.

    This is exact for the componentwise maximum of a P1 field; the maximum
    of ``|u|`` inside a cell may exceed it slightly.
    """
    u = as_field(mesh, u).reshape(-1, 3)
    return float(np.sqrt(np.einsum("ik,ik->i", u, u)).max(initial=0.0))


def _at_points(mesh, u, rule):
    u = as_field(mesh, u).reshape(-1, 3)
    return np.einsum("qi,cik->cqk", rule.points, u[mesh.cells])


def norm_l4(mesh, u) -> float:
    """``(int |u|^4)^(1/4)`` with the degree-4 rule (exact for P1 data)."""
    rule = simplex_rule(mesh.dim, 4)
    _, w = physical_points(mesh, rule)
    uq = _at_points(mesh, u, rule)
    s = np.einsum("cqk,cqk->cq", uq, uq)
    return float(np.sum(w * s * s)) ** 0.25


def weighted_product_sq(mesh, w, u) -> float:
    """``|| |w| |u| ||_{L2}^2`` by the degree-4 rule."""
    rule = simplex_rule(mesh.dim, 4)
    _, q = physical_points(mesh, rule)
    wq = _at_points(mesh, w, rule)
    uq = _at_points(mesh, u, rule)
    return float(np.sum(q * np.einsum("cqk,cqk->cq", wq, wq) * np.einsum("cqk,cqk->cq", uq, uq)))


def quadrature_norms(mesh, u, degree: int = 2) -> tuple[float, float]:
    """L2 norm and H1 seminorm by direct quadrature (matrix-free check)."""
    rule = simplex_rule(mesh.dim, degree)
    _, w = physical_points(mesh, rule)
    uq = _at_points(mesh, u, rule)
    l2 = float(np.sum(w * np.einsum("cqk,cqk->cq", uq, uq)))
    g = mesh.barycentric_gradients()
    uc = as_field(mesh, u).reshape(-1, 3)[mesh.cells]
    grad = np.einsum("cad,cak->ckd", g, uc)
    h1 = float(np.sum(mesh.cell_volumes() * np.einsum("ckd,ckd->c", grad, grad)))
    return math.sqrt(l2), math.sqrt(h1)


def norm_sample(mesh, u, t: float, M=None, S=None) -> NormSample:
    l2 = norm_l2(mesh, u, M)
    semi = seminorm_h1(mesh, u, S)
    return NormSample(t, l2, semi, math.hypot(l2, semi), norm_linf(mesh, u), norm_l4(mesh, u))


def energy_terms(mesh, prev, cur, params, k: float, M, S) -> tuple[float, float]:
    """Left and right side of the balance obtained by testing a step with ``u^j``.

    LHS = 1/2 |u^j|^2 + 1/2 |u^j - u^{j-1}|^2 + eps/2 |grad u^j|^2
          + eps/2 |grad(u^j - u^{j-1})|^2 + k kappa1 |grad u^j|^2
          + k kappa2 |u^j|^2 + k kappa2 mu || |u^{j-1}| |u^j| ||^2
    RHS = 1/2 |u^{j-1}|^2 + eps/2 |grad u^{j-1}|^2
    """
    p = params
    du = cur - prev
    m_cur, m_prev, m_du = _quadform(M, cur), _quadform(M, prev), _quadform(M, du)
    s_cur, s_prev, s_du = _quadform(S, cur), _quadform(S, prev), _quadform(S, du)
    lhs = (0.5 * m_cur + 0.5 * m_du + 0.5 * p.epsilon * (s_cur + s_du)
           + k * p.kappa1 * s_cur + k * p.kappa2 * m_cur
           + k * p.kappa2 * p.mu * weighted_product_sq(mesh, prev, cur))
    rhs = 0.5 * m_prev + 0.5 * p.epsilon * s_prev
    return lhs, rhs


def energy_residual(prev, cur, params, k: float) -> float:
    """Signed LHS - RHS of the per-step energy balance for consecutive states."""
    lhs, rhs = energy_terms(cur.mesh, prev.u, cur.u, params, k, cur.M, cur.S)
    return lhs - rhs


def relative_energy_residual(prev, cur, params, k: float) -> float:
    """``(LHS - RHS) / RHS``; zero when both sides vanish."""
    lhs, rhs = energy_terms(cur.mesh, prev.u, cur.u, params, k, cur.M, cur.S)
    if rhs == 0.0:
        return 0.0 if lhs == 0.0 else math.inf
    return (lhs - rhs) / rhs


def decay_rate(params, k: float) -> float:
    """``2 kappa2 / (1 + 2 kappa2 k)``."""
    return 2.0 * params.kappa2 / (1.0 + 2.0 * params.kappa2 * k)


def energy(sample: NormSample, epsilon: float) -> float:
    """``|u|^2 + eps |grad u|^2``."""
    return sample.l2 ** 2 + epsilon * sample.h1_semi ** 2


def decay_report(trajectory, params, k: float) -> np.ndarray:
    """Margins ``a_0 exp(-lambda t_n) - a_n`` with ``a = |u|^2 + eps |grad u|^2``.

    Nonnegative margins mean the discrete exponential decay holds.  The
    bound is guaranteed for ``eps < kappa1 / kappa2``.
    """
    if params.kappa2 <= 0:
        raise ValueError("kappa2 must be positive")
    lam = decay_rate(params, k)
    a = np.array([energy(s, params.epsilon) for s in trajectory.norms])
    t = np.array([s.t for s in trajectory.norms])
    return a[0] * np.exp(-lam * t) - a


def linf_decay_monitor(trajectory, params) -> np.ndarray:
    """``|u^n|_{Linf} exp(kappa2 t_n)``; bounded by ``|u^0|_{Linf}`` in the continuum."""
    return np.array([s.linf * math.exp(params.kappa2 * s.t) for s in trajectory.norms])
