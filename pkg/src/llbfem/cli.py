"""Command line interface.

Exit codes: 0 success, 1 configuration or usage error, 2 solver failure,
3 failed verification (oracle/MMS suites or a violated decay bound).
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .diagnostics import (decay_rate, decay_report, energy, linf_decay_monitor,
                          relative_energy_residual)
from .io import (ConfigError, load_config, write_columns_csv, write_csv_table, write_norms_csv,
                 write_vtk)
from .linalg import SolverError
from .mesh import make_mesh
from .scheme import StepError, run
from .studies import eps_study, h_study, k_study
from .verification import manufactured_suite, oracle_suite

log = logging.getLogger("llbfem")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VERIFY = 0, 1, 2, 3
DECAY_TOL = 1e-10


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _say(args, msg):
    if not args.quiet:
        print(msg)


def cmd_simulate(cfg, out: Path, args) -> int:
    mesh = make_mesh(cfg.domain, cfg.n)
    worst = [0.0]

    def check(prev, cur):
        worst[0] = max(worst[0], abs(relative_energy_residual(prev, cur, cfg.params, cfg.grid.k)))

    traj = run(mesh, cfg.params, cfg.grid, cfg.u0(), observers=[check],
               snapshot_stride=cfg.stride, solver=cfg.solver)
    write_norms_csv(traj.norms, out / cfg.output.norms_csv)
    if cfg.output.vtk:
        for j, u in sorted(traj.snapshots.items()):
            write_vtk(mesh, u, out / f"u_{j:05d}.vtk")
    _say(args, f"{cfg.N} steps on {mesh.n_vertices} vertices; "
               f"|u|_L2 {traj.norms[0].l2:.6g} -> {traj.norms[-1].l2:.6g}; "
               f"max relative energy residual {worst[0]:.2e}")
    return EXIT_OK


def cmd_decay(cfg, out: Path, args) -> int:
    mesh = make_mesh(cfg.domain, cfg.n)
    traj = run(mesh, cfg.params, cfg.grid, cfg.u0(), snapshot_stride=cfg.N, solver=cfg.solver)
    margins = decay_report(traj, cfg.params, cfg.grid.k)
    lam = decay_rate(cfg.params, cfg.grid.k)
    a = [energy(s, cfg.params.epsilon) for s in traj.norms]
    t = traj.times
    write_columns_csv(out / "decay.csv", {
        "t": t, "energy": a, "envelope": a[0] * np.exp(-lam * t), "margin": margins,
        "linf": [s.linf for s in traj.norms], "linf_monitor": linf_decay_monitor(traj, cfg.params),
    })
    write_norms_csv(traj.norms, out / cfg.output.norms_csv)
    ok = bool(margins.min() >= -DECAY_TOL)
    _say(args, f"decay rate {lam:.6g}; min margin {margins.min():.3e} -> {'ok' if ok else 'VIOLATED'}")
    return EXIT_OK if ok else EXIT_VERIFY


def _study_out(table, rates, out: Path, cfg, args):
    write_csv_table(table, out / cfg.output.table_csv, rates)
    for norm, r in rates.summary.items():
        _say(args, f"{table.axis}-rate[{norm}] = {r:.4f}  (ratios {np.round(rates.ratios[norm], 4).tolist()})")


def cmd_h_study(cfg, out, args) -> int:
    table, rates = h_study(cfg.domain, cfg.params, cfg.grid, cfg.u0(), cfg.study.levels, cfg.study.n0, cfg.solver)
    _study_out(table, rates, out, cfg, args)
    return EXIT_OK


def cmd_k_study(cfg, out, args) -> int:
    mesh = make_mesh(cfg.domain, cfg.n)
    table, rates = k_study(mesh, cfg.params, cfg.T, cfg.study.N_sequence, cfg.u0(), cfg.solver)
    _study_out(table, rates, out, cfg, args)
    return EXIT_OK


def cmd_eps_study(cfg, out, args) -> int:
    mesh = make_mesh(cfg.domain, cfg.n)
    table, rates = eps_study(mesh, cfg.params, cfg.grid, cfg.u0(), cfg.study.eps_sequence, cfg.solver)
    _study_out(table, rates, out, cfg, args)
    return EXIT_OK


def cmd_verify(cfg, out, args) -> int:
    reports = oracle_suite() + manufactured_suite()
    for r in reports:
        _say(args, str(r))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VERIFY


COMMANDS = {
    "simulate": cmd_simulate,
    "h-study": cmd_h_study,
    "k-study": cmd_k_study,
    "eps-study": cmd_eps_study,
    "decay": cmd_decay,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="llbfem", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=name != "verify", type=Path, help="TOML run configuration")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory (default ./out)")
        p.add_argument("--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        cfg = load_config(args.config) if args.config is not None else None
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    args.out.mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[args.command](cfg, args.out, args)
    except (StepError, SolverError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
