"""Convergence studies on the cube and the square screen."""
import csv
import logging
import math
import time
import warnings
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .assembly import (DofLayout, ExactSolution, assemble_B, assemble_load_analytic,
                       assemble_load_manufactured, cube_product_values, screen_hat_values)
from .error_analysis import l2_error_phi, l2_error_sigma, l2_error_sigma_hat
from .exceptions import DPGError
from .mesh import build_cube_surface, build_square_screen, refine_uniform, write_obj
from .potentials import QuadratureConfig
from .solver import solve_normal_equations

log = logging.getLogger(__name__)

COLUMNS = ("level", "num_triangles", "h_min", "energy_err_sq", "l2_sigma", "l2_phi",
           "l2_sigma_hat", "cg_iters", "wall_ms")

# experiment id -> (geometry, load kind)
EXPERIMENTS = {
    1: ("cube", "manufactured"),
    2: ("cube", "x"),
    3: ("screen", "manufactured"),
    4: ("screen", "one"),
}
LEVEL_CAPS = {"cube": 3, "screen": 5}


class CostWarning(UserWarning):
    pass


@dataclass
class ExperimentConfig:
    experiment: int = 3
    levels: int = 3
    degree_increment: int = 2
    tol: float = 1e-10
    out: str = ""
    quad_profile: str = "fast"
    dump_mesh: str = ""
    seed: int = 0
    nodal_values: tuple = ()

    def __post_init__(self):
        self.experiment = int(self.experiment)
        self.levels = int(self.levels)
        self.degree_increment = int(self.degree_increment)
        self.tol = float(self.tol)
        self.seed = int(self.seed)
        self.nodal_values = tuple(float(v) for v in self.nodal_values)
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {sorted(EXPERIMENTS)}")
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if self.degree_increment not in (1, 2, 3):
            raise ValueError("degree_increment must be 1, 2 or 3")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        QuadratureConfig.profile(self.quad_profile)

    @property
    def geometry(self):
        return EXPERIMENTS[self.experiment][0]

    @property
    def load_kind(self):
        return EXPERIMENTS[self.experiment][1]

    @property
    def quadrature(self):
        return QuadratureConfig.profile(self.quad_profile)

    def to_text(self):
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "nodal_values":
                v = ",".join(repr(x) for x in v)
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        known = {f.name for f in fields(cls)}
        kw = {}
        for n, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {n}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in known:
                raise ValueError(f"line {n}: unknown key {key!r}")
            if key == "nodal_values":
                kw[key] = tuple(float(x) for x in val.split(",") if x.strip())
            else:
                kw[key] = val
        return cls(**kw)


@dataclass
class ConvergenceRecord:
    experiment: int
    rows: list = field(default_factory=list)
    nodal_values: np.ndarray = None

    def column(self, name):
        return np.array([np.nan if r.get(name) is None else r[name] for r in self.rows],
                        dtype=float)

    @property
    def num_triangles(self):
        return self.column("num_triangles")


def coarse_mesh(geometry):
    return build_cube_surface() if geometry == "cube" else build_square_screen()


def default_nodal_values(mesh):
    return cube_product_values(mesh) if mesh.is_closed else screen_hat_values(mesh)


def make_load(kind):
    if kind == "x":
        return lambda p: p[:, 0]
    if kind == "one":
        return lambda p: np.ones(len(p))
    raise ValueError(kind)


def solve_level(mesh, cfg, exact=None):
    """Assemble and solve on one mesh; returns ``(system, coefficients, report)``."""
    layout = DofLayout.for_mesh(mesh, cfg.degree_increment)
    if exact is not None:
        load = assemble_load_manufactured(mesh, layout, exact)
    else:
        load = assemble_load_analytic(mesh, layout, make_load(cfg.load_kind))
    sys = assemble_B(mesh, layout, cfg.quadrature, load)
    u, rep = solve_normal_equations(sys, tol=cfg.tol)
    if not rep.converged:
        log.warning("CG stopped after %d iterations (relative residual %.3e)",
                    rep.iterations, rep.residual)
    return sys, u, rep


def run_experiment(cfg, out=None):
    """Run all levels of ``cfg``; writes the CSV if ``cfg.out`` (or ``out``) is set.

    A module error aborts the run; the partial record is attached to the
    exception as ``record``.
    """
    out = out or cfg.out
    if cfg.levels - 1 > LEVEL_CAPS[cfg.geometry]:
        warnings.warn(f"{cfg.geometry} runs beyond level {LEVEL_CAPS[cfg.geometry]} are "
                      f"expensive: nonlocal assembly grows quadratically with the mesh",
                      CostWarning, stacklevel=2)
    mesh = coarse_mesh(cfg.geometry)
    exact = None
    record = ConvergenceRecord(cfg.experiment)
    if cfg.load_kind == "manufactured":
        vals = np.array(cfg.nodal_values) if cfg.nodal_values else default_nodal_values(mesh)
        exact = ExactSolution(mesh, vals)
        record.nodal_values = exact.nodal_values
    try:
        for level in range(cfg.levels):
            if level > 0:
                mesh = refine_uniform(mesh)
            t0 = time.perf_counter()
            sys, u, rep = solve_level(mesh, cfg, exact)
            row = {"level": level, "num_triangles": mesh.num_triangles, "h_min": mesh.h_min,
                   "energy_err_sq": rep.energy_error_sq, "cg_iters": rep.iterations}
            if exact is not None:
                row["l2_phi"] = l2_error_phi(mesh, u, exact)
                row["l2_sigma"] = l2_error_sigma(mesh, u, exact)
                row["l2_sigma_hat"] = l2_error_sigma_hat(mesh, u, exact)
            row["wall_ms"] = 1e3 * (time.perf_counter() - t0)
            record.rows.append(row)
            log.info("level %d: %d triangles, energy error^2 %.6e, %d CG iterations",
                     level, mesh.num_triangles, rep.energy_error_sq, rep.iterations)
    except DPGError as exc:
        exc.record = record
        if out:
            emit_csv(record, out)
        raise
    finally:
        if cfg.dump_mesh:
            write_obj(mesh, cfg.dump_mesh)
    if out:
        emit_csv(record, out)
    return record


def slopes(errors, sizes):
    """``log(e_k / e_k+1) / log(x_k+1 / x_k)``; NaN where an error is not positive."""
    e = np.asarray(errors, dtype=float)
    x = np.asarray(sizes, dtype=float)
    out = np.full(max(len(e) - 1, 0), np.nan)
    for k in range(len(e) - 1):
        if e[k] > 0 and e[k + 1] > 0 and np.isfinite(e[k]) and np.isfinite(e[k + 1]):
            out[k] = math.log(e[k] / e[k + 1]) / math.log(x[k + 1] / x[k])
    return out


def eoc(record, column="energy_err_sq", against="triangles"):
    """Empirical orders between consecutive levels of ``record``.

    ``against="triangles"`` measures w.r.t. the triangle count N,
    ``against="h"`` w.r.t. the minimal mesh size (``log(e_k/e_k+1) / log(h_k/h_k+1)``).
    """
    if against == "triangles":
        x = record.column("num_triangles")
    elif against == "h":
        x = 1.0 / record.column("h_min")
    else:
        raise ValueError(f"unknown abscissa {against!r}")
    return slopes(record.column(column), x)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def emit_csv(record, path):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for row in record.rows:
            w.writerow([_fmt(row.get(c)) for c in COLUMNS])
    return path


def emit_gnuplot(record, csv_path, path):
    """Log-log plot script of the error columns versus the triangle count."""
    cols = [c for c in ("energy_err_sq", "l2_sigma", "l2_phi", "l2_sigma_hat")
            if np.any(np.isfinite(record.column(c)))]
    n0 = record.rows[0]["num_triangles"] if record.rows else 1
    e0 = record.rows[0]["energy_err_sq"] if record.rows else 1.0
    plots = [f"'{csv_path}' using 2:{COLUMNS.index(c) + 1} with linespoints title '{c}'"
             for c in cols]
    plots.append(f"{e0 * n0!r}/x with lines dashtype 2 title 'N^-1'")
    text = ("set datafile separator ','\nset key autotitle columnhead\n"
            "set logscale xy\nset xlabel 'number of triangles'\nset ylabel 'error'\n"
            "plot " + ", \\\n     ".join(plots) + "\n")
    Path(path).write_text(text)
    return path


def record_summary(record):
    """Plain-text table of the record with EOC columns."""
    lines = ["  ".join(f"{c:>14}" for c in COLUMNS[:-1])]
    for r in record.rows:
        lines.append("  ".join(f"{_fmt(r.get(c))[:14]:>14}" for c in COLUMNS[:-1]))
    s = eoc(record)
    if len(s):
        lines.append("EOC energy_err_sq vs N: " + " ".join(f"{x:.3f}" for x in s))
    return "\n".join(lines)


