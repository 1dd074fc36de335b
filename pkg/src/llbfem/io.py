"""Run configuration (TOML), legacy VTK and CSV writers."""
from __future__ import annotations

import csv
import math
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np
import tomli
import tomli_w

from .mesh import GENERATORS
from .presets import PRESETS, get_preset
from .scheme import SchemeParams, SolverOptions, TimeGrid


class ConfigError(ValueError):
    """Invalid configuration document."""


@dataclass(frozen=True)
class OutputConfig:
    snapshot_stride: int | None = None
    vtk: bool = True
    norms_csv: str = "norms.csv"
    table_csv: str = "table.csv"


@dataclass(frozen=True)
class StudyConfig:
    levels: int = 4
    n0: int = 4
    N_sequence: tuple[int, ...] = (200, 400, 800, 1600)
    eps_sequence: tuple[float, ...] = (1e-2, 5e-3, 2.5e-3, 1.25e-3)


@dataclass(frozen=True)
class RunConfig:
    domain: str
    n: int
    params: SchemeParams
    T: float
    N: int
    initial: str | tuple[str, str, str]
    preset: str | None = None
    output: OutputConfig = field(default_factory=OutputConfig)
    solver: SolverOptions = field(default_factory=SolverOptions)
    study: StudyConfig = field(default_factory=StudyConfig)

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.T, self.N)

    @property
    def stride(self) -> int:
        return self.output.snapshot_stride or max(1, self.N // 50)

    def u0(self):
        if isinstance(self.initial, str):
            return get_preset(self.initial).u0
        return expression_field(self.initial)


_EXPR_NAMESPACE = {
    name: getattr(np, name)
    for name in ("sin", "cos", "tan", "exp", "log", "sqrt", "abs", "sinh", "cosh", "tanh", "arctan", "pi")
}


def expression_field(exprs: Sequence[str]):
    """Vector field from three expressions in ``x, y, z`` (numpy semantics)."""
    codes = []
    for e in exprs:
        try:
            codes.append(compile(e, "<initial>", "eval"))
        except SyntaxError as exc:
            raise ConfigError(f"initial.expr: cannot parse {e!r}: {exc.msg}") from None

    def f(p):
        p = np.atleast_2d(p)
        ns = dict(_EXPR_NAMESPACE)
        for i, name in enumerate("xyz"):
            ns[name] = p[:, i] if i < p.shape[1] else np.zeros(len(p))
        return np.column_stack([np.broadcast_to(eval(c, {"__builtins__": {}}, ns), (len(p),)) for c in codes])

    return f


_TOP_KEYS = {"preset", "domain", "n", "T", "N", "params", "initial", "output", "solver", "study"}


def _check_keys(section: str, table: dict, allowed):
    if not isinstance(table, dict):
        raise ConfigError(f"{section}: expected a table")
    unknown = set(table) - set(allowed)
    if unknown:
        raise ConfigError(f"{section}: unknown key(s) {sorted(unknown)}")


def _build(cls, section: str, table: dict, base=None):
    names = [f.name for f in fields(cls)]
    _check_keys(section, table, names)
    values = asdict(base) if base is not None else {}
    values.update(table)
    for k, v in values.items():
        if isinstance(v, list):
            values[k] = tuple(v)
    try:
        return cls(**values)
    except TypeError as exc:
        raise ConfigError(f"{section}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{section}: {exc}") from None


def parse_config(text: str) -> RunConfig:
    """Parse and validate a TOML run configuration.

    A ``preset`` key (``sim1`` .. ``sim6``) supplies domain, resolution,
    coefficients, time grid and initial data; any explicit key overrides it.
    Without a preset, ``domain``, ``n``, ``T``, ``N``, ``[params]`` and
    ``[initial]`` are required.
    """
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax error: {exc}") from None
    _check_keys("top level", doc, _TOP_KEYS)
    preset = doc.get("preset")
    base = None
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"preset: unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        base = PRESETS[preset]

    def need(key, default):
        if key in doc:
            return doc[key]
        if base is None:
            raise ConfigError(f"{key}: required (no preset given)")
        return default

    domain = need("domain", base and base.domain)
    if domain not in GENERATORS:
        raise ConfigError(f"domain: unknown domain {domain!r}")
    n, N, T = need("n", base and base.n), need("N", base and base.N), need("T", base and base.T)
    if not isinstance(n, int) or n < 1:
        raise ConfigError(f"n: must be a positive integer, got {n!r}")
    if not isinstance(N, int) or N < 1:
        raise ConfigError(f"N: must be a positive integer, got {N!r}")
    if not isinstance(T, (int, float)) or not math.isfinite(T) or T <= 0:
        raise ConfigError(f"T: must be positive, got {T!r}")

    if "params" not in doc and base is None:
        raise ConfigError("params: required (no preset given)")
    params = _build(SchemeParams, "params", doc.get("params", {}), base and base.params)

    initial = doc.get("initial")
    if initial is None:
        if base is None:
            raise ConfigError("initial: required (no preset given)")
        initial = base.name
    else:
        _check_keys("initial", initial, {"preset", "expr"})
        if ("preset" in initial) == ("expr" in initial):
            raise ConfigError("initial: give exactly one of 'preset' or 'expr'")
        if "preset" in initial:
            initial = initial["preset"]
            if initial not in PRESETS:
                raise ConfigError(f"initial.preset: unknown preset {initial!r}")
        else:
            expr = initial["expr"]
            if not (isinstance(expr, list) and len(expr) == 3 and all(isinstance(e, str) for e in expr)):
                raise ConfigError("initial.expr: expected a list of three strings")
            expression_field(expr)
            initial = tuple(expr)

    output = _build(OutputConfig, "output", doc.get("output", {}))
    if output.snapshot_stride is not None and output.snapshot_stride < 1:
        raise ConfigError("output.snapshot_stride: must be >= 1")
    solver = _build(SolverOptions, "solver", doc.get("solver", {}))
    if not solver.tol > 0 or solver.max_iter < 1:
        raise ConfigError("solver: tol must be > 0 and max_iter >= 1")
    study = _build(StudyConfig, "study", doc.get("study", {}))
    return RunConfig(domain, n, params, float(T), N, initial, preset, output, solver, study)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def dump_config(cfg: RunConfig) -> str:
    """Fully explicit TOML for ``cfg``; ``parse_config`` inverts it."""
    doc = {"domain": cfg.domain, "n": cfg.n, "T": cfg.T, "N": cfg.N}
    if cfg.preset is not None:
        doc["preset"] = cfg.preset
    doc["params"] = asdict(cfg.params)
    doc["initial"] = {"preset": cfg.initial} if isinstance(cfg.initial, str) else {"expr": list(cfg.initial)}
    out = {k: v for k, v in asdict(cfg.output).items() if v is not None}
    doc["output"] = out
    doc["solver"] = asdict(cfg.solver)
    doc["study"] = {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(cfg.study).items()}
    return tomli_w.dumps(doc)


VTK_CELL_TYPES = {1: 3, 2: 5, 3: 10}


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_vtk(mesh, field_values, path, name: str = "u") -> None:
    """Legacy ASCII VTK unstructured grid with one point-vector field.

    Points always carry three coordinates (zero-padded for 1D/2D meshes).
    """
    u = np.asarray(field_values, dtype=float).reshape(-1, 3)
    if u.shape[0] != mesh.n_vertices:
        raise ValueError("field does not match mesh")
    pts = np.zeros((mesh.n_vertices, 3))
    pts[:, :mesh.dim] = mesh.vertices
    nc, nper = mesh.cells.shape
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        "# vtk DataFile Version 3.0",
        f"llbfem {mesh.domain_tag} level {mesh.level}",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.n_vertices} double",
    ]
    lines += [" ".join(_fmt(v) for v in p) for p in pts]
    lines.append(f"CELLS {nc} {nc * (nper + 1)}")
    lines += [f"{nper} " + " ".join(str(int(i)) for i in c) for c in mesh.cells]
    lines.append(f"CELL_TYPES {nc}")
    lines += [str(VTK_CELL_TYPES[mesh.dim])] * nc
    lines.append(f"POINT_DATA {mesh.n_vertices}")
    lines.append(f"VECTORS {name} double")
    lines += [" ".join(_fmt(v) for v in row) for row in u]
    path.write_text("\n".join(lines) + "\n")


NORM_COLUMNS = ("t", "l2", "h1_semi", "h1", "linf", "l4")


def write_norms_csv(samples, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(NORM_COLUMNS)
        for s in samples:
            w.writerow([_fmt(getattr(s, c)) for c in NORM_COLUMNS])


def write_csv_table(table, path, rates=None) -> None:
    """Error table with one row per level and the rate from the previous row.

    The ``rate_*`` entry of row ``i`` is ``log2(e_{i-1} / e_i)``; the first
    row has none.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    norms = list(table.errors)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([table.axis] + norms + [f"rate_{k}" for k in norms])
        for i, (p, errs) in enumerate(table.rows()):
            row = [_fmt(p)] + [_fmt(errs[k]) for k in norms]
            for k in norms:
                row.append(_fmt(rates.ratios[k][i - 1]) if rates is not None and i > 0 else "")
            w.writerow(row)


def write_columns_csv(path, columns: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    keys = list(columns)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(keys)
        for row in zip(*columns.values()):
            w.writerow([_fmt(v) for v in row])


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def ensure_dir(path) -> Path:
    p = Path(path)
    os.makedirs(p, exist_ok=True)
    return p
