"""Extrapolated convergence studies in h, k and epsilon.

The exact solutions are unknown, so every study compares consecutive
discretisations:

* h: ``u_h - u_{h/2}`` on nested meshes, the coarse solution prolonged to
  the finer mesh (exact for P1), max over all time steps;
* k: ``u^{(N)} - u^{(2N)}`` on one mesh, compared at the nodes of the
  coarser time grid, max over those nodes;
* eps: ``u(eps) - u(0)`` on one mesh and time grid, max over time.

Rates are ``log2`` of ratios of successive errors.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .diagnostics import norm_linf
from .mesh import make_mesh, refine_uniform
from .scheme import SchemeParams, SolverOptions, TimeGrid, check_time_step, init_state, step

log = logging.getLogger(__name__)

NORMS = ("l2", "h1", "linf")


@dataclass
class ErrorTable:
    """Errors per refinement level, sorted by decreasing parameter."""

    axis: str
    params: list[float] = field(default_factory=list)
    errors: dict[str, list[float]] = field(default_factory=lambda: {k: [] for k in NORMS})

    def add(self, value: float, errs: Mapping[str, float]):
        self.params.append(value)
        for k, v in errs.items():
            self.errors.setdefault(k, []).append(float(v))

    def rows(self):
        for i, p in enumerate(self.params):
            yield p, {k: v[i] for k, v in self.errors.items()}


@dataclass
class RateReport:
    """``log2`` ratios of consecutive errors; ``summary`` is the median of the last two."""

    ratios: dict[str, np.ndarray]
    summary: dict[str, float]

    def __getitem__(self, norm: str) -> float:
        return self.summary[norm]


def _ratios(errors: Sequence[float]) -> np.ndarray:
    e = np.asarray(errors, dtype=float)
    if e.size < 2:
        raise ValueError("need at least two errors to form a rate")
    if not np.all(np.isfinite(e)) or np.any(e <= 0):
        raise ValueError(f"errors must be positive and finite, got {e.tolist()}")
    return np.log2(e[:-1] / e[1:])


def compute_rate(errors) -> RateReport:
    """Rates for one error sequence or a mapping ``norm -> sequence``.

    A single sequence is reported under the key ``"e"``.
    """
    if not isinstance(errors, Mapping):
        errors = {"e": errors}
    ratios = {k: _ratios(v) for k, v in errors.items()}
    return RateReport(ratios, {k: float(np.median(r[-2:])) for k, r in ratios.items()})


def safe_rates(table: ErrorTable) -> RateReport:
    """Like :func:`compute_rate` but NaN where a sequence has zero entries."""
    ratios, summary = {}, {}
    for k, v in table.errors.items():
        try:
            r = _ratios(v)
            ratios[k], summary[k] = r, float(np.median(r[-2:]))
        except ValueError:
            ratios[k] = np.full(max(len(v) - 1, 0), np.nan)
            summary[k] = math.nan
    return RateReport(ratios, summary)


def _diff_norms(mesh, d: np.ndarray, M, S) -> dict[str, float]:
    dv = d.reshape(-1, 3)
    l2 = float(np.einsum("ik,ik->", dv, M @ dv))
    semi = float(np.einsum("ik,ik->", dv, S @ dv))
    return {"l2": math.sqrt(max(l2, 0.0)), "h1": math.sqrt(max(l2 + semi, 0.0)), "linf": norm_linf(mesh, d)}


def _update_max(acc: dict, new: dict):
    for k, v in new.items():
        acc[k] = max(acc.get(k, 0.0), v)


def h_study(domain: str, params: SchemeParams, grid: TimeGrid, u0, levels: int, n0: int = 4,
            solver: SolverOptions = SolverOptions()):
    """Nested-mesh study on ``n0 * 2**i`` subdivisions, ``i < levels``.

    All levels are advanced in lockstep with the same time grid, and the
    max over every time step of ``|u_h - u_{h/2}|`` is recorded in each norm.
    Returns ``(ErrorTable, RateReport)``; the table has ``levels - 1`` rows
    keyed by the coarse ``1/h`` (subdivisions per unit length).
    """
    if levels < 2:
        raise ValueError("h_study needs at least two levels")
    meshes, prolongs = [make_mesh(domain, n0)], []
    for _ in range(levels - 1):
        fine, P = refine_uniform(meshes[-1])
        meshes.append(fine)
        prolongs.append(P)
    for m in meshes:
        check_time_step(m, grid.k)
    states = [init_state(m, u0, params) for m in meshes]
    errs = [dict.fromkeys(NORMS, 0.0) for _ in prolongs]

    def compare():
        for i, P in enumerate(prolongs):
            f = states[i + 1]
            _update_max(errs[i], _diff_norms(f.mesh, P(states[i].u) - f.u, f.M, f.S))

    compare()
    for j in range(grid.N):
        states = [step(s, params, grid.k, solver) for s in states]
        compare()
        log.debug("h_study step %d/%d", j + 1, grid.N)
    table = ErrorTable("h")
    for i, e in enumerate(errs):
        table.add(n0 * 2 ** i, e)
    return table, safe_rates(table)


def k_study(mesh, params: SchemeParams, T: float, N_sequence: Sequence[int], u0,
            solver: SolverOptions = SolverOptions()):
    """Time-step study on one mesh with doubling step counts.

    Row ``i`` holds ``max_n |u^{(N_i)}(t_n) - u^{(N_{i+1})}(t_n)|`` over the
    nodes ``t_n = n T / N_i`` and is keyed by ``k_i = T / N_i``.
    """
    Ns = list(N_sequence)
    if len(Ns) < 2 or any(b != 2 * a for a, b in zip(Ns, Ns[1:])):
        raise ValueError(f"N sequence must double, got {Ns}")
    N_max = Ns[-1]
    ratio = [N_max // N for N in Ns]
    s0 = init_state(mesh, u0, params)
    states = [s0] * len(Ns)
    errs = [dict.fromkeys(NORMS, 0.0) for _ in Ns[:-1]]
    for s in range(1, N_max + 1):
        for i, N in enumerate(Ns):
            if s % ratio[i] == 0:
                states[i] = step(states[i], params, T / N, solver)
        for i in range(len(Ns) - 1):
            if s % ratio[i] == 0:
                _update_max(errs[i], _diff_norms(mesh, states[i].u - states[i + 1].u, s0.M, s0.S))
    table = ErrorTable("k")
    for N, e in zip(Ns, errs):
        table.add(T / N, e)
    return table, safe_rates(table)


def eps_study(mesh, params_base: SchemeParams, grid: TimeGrid, u0, eps_sequence: Sequence[float],
              solver: SolverOptions = SolverOptions()):
    """``max_n |u_eps^(n) - u_0^(n)|`` for each eps against the eps = 0 run.

    All runs share the mesh, time grid and projected initial data.  The
    rate is reported per halving of eps.
    """
    eps = [float(e) for e in eps_sequence]
    runs = [replace(params_base, epsilon=0.0)] + [replace(params_base, epsilon=e) for e in eps]
    s0 = init_state(mesh, u0, params_base)
    states = [s0] * len(runs)
    errs = [dict.fromkeys(NORMS, 0.0) for _ in eps]
    for _ in range(grid.N):
        states = [step(s, p, grid.k, solver) for s, p in zip(states, runs)]
        for i in range(len(eps)):
            _update_max(errs[i], _diff_norms(mesh, states[i + 1].u - states[0].u, s0.M, s0.S))
    table = ErrorTable("eps")
    for e, err in zip(eps, errs):
        table.add(e, err)
    return table, safe_rates(table)
