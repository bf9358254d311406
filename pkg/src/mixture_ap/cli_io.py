"""
Scenario configuration, runs, output files and run comparison.

Config grammar
--------------
One ``key = value`` pair per line.  ``#`` starts a comment, blank lines are
ignored and a line ``[section]`` prefixes the following keys with
``section.``, so ``[grid]`` followed by ``n = 8`` sets ``grid.n``.  Vector
values are comma separated (``u = 0.1, 0, 0``), booleans are
``true``/``false``.  Every key must be known (see ``SCHEMA``); missing keys
take their documented default.

CSV output
----------
The resolved config is written first as ``# key = value`` comment lines,
then the header ``CSV_COLUMNS`` and one row per output sample.  A run that
stops on a solver error ends with the line ``# TRUNCATED: <reason>``.

Snapshots
---------
Little-endian binary: the 8-byte magic ``b"MXAPSNP1"``, int64 ``ndim``,
``ndim`` int64 dims, float64 ``t``, float64 ``eps``, float64 extents
``(x_length, v_max)`` (``x_length`` is 0 for homogeneous runs), then the
row-major float64 array of shape ``dims``.  The leading dimension 4 orders
the fields fL0, fL1, fH0, fH1; inhomogeneous snapshots add the cell axis
next.
"""

import io
import json
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import ap_homogeneous as aph
from . import ap_inhomogeneous as api
from . import limit_oracle as lo
from . import penalty as pn
from .collision_boltzmann import BoltzKernel
from .collision_fpl import FPLKernel
from .errors import (ConfigError, MismatchedSeries, MixtureError, ParseError, ValidationError)
from .operators import CollisionModel
from .phase_space import VelocityGrid, compute_moments

CSV_COLUMNS = ("t", "n_L", "ux_L", "uy_L", "uz_L", "T_L", "n_H", "ux_H", "uy_H", "uz_H", "T_H",
               "mass_L", "mass_H", "energy_total", "neg_nodes_L0", "neg_nodes_H0")

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_COMPARE = 0, 1, 2, 3
THREADS_ENV = "MIXTURE_AP_THREADS"
SNAPSHOT_MAGIC = b"MXAPSNP1"
MODES = ("homogeneous", "inhomogeneous", "oracle", "compare")


def _vec(s):
    parts = [p for p in s.replace(" ", "").split(",") if p]
    if len(parts) == 1:
        parts = parts * 3
    if len(parts) != 3:
        raise ValueError("expected 1 or 3 comma-separated numbers")
    return tuple(float(p) for p in parts)


def _bool(s):
    t = s.strip().lower()
    if t in ("true", "yes", "1"):
        return True
    if t in ("false", "no", "0"):
        return False
    raise ValueError("expected true or false")


def _opt_float(s):
    return None if s.strip().lower() in ("none", "auto", "") else float(s)


def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


# key: (parser, default, check, description)
SCHEMA = {
    "mode": (str, "homogeneous", lambda v: v in MODES, f"one of {', '.join(MODES)}"),
    "eps": (float, 0.01, _pos, "light/heavy scale parameter"),
    "dt": (float, 0.01, _pos, "time step"),
    "t_end": (float, 1.0, _nonneg, "final time"),
    "seed": (int, 0, _nonneg, "seed of the random perturbation"),
    "grid.n": (int, 8, lambda v: v >= 4 and v % 2 == 0, "velocity points per axis (even)"),
    "grid.v_max": (float, 6.0, _pos, "velocity box half-width"),
    "mesh.nx": (int, 8, lambda v: v >= 2, "cells (inhomogeneous mode)"),
    "mesh.dx": (float, 0.125, _pos, "cell width"),
    "mesh.periodic": (_bool, True, None, "periodic boundary"),
    "mesh.cfl": (float, 0.9, _pos, "CFL number of the transport step"),
    "model.kind": (str, "boltzmann", lambda v: v in ("boltzmann", "fpl"), "boltzmann or fpl"),
    "model.conservative": (_bool, True, None, "conservative projections of the Boltzmann operators"),
    "kernel.gamma": (float, 0.0, None, "kernel exponent"),
    "kernel.b0": (float, 0.1, _pos, "Boltzmann angular constant"),
    "kernel.sphere_order": (int, 4, lambda v: v >= 2, "sphere rule order"),
    "kernel.delta": (float, 1e-6, _nonneg, "kernel regularisation"),
    "penalty.beta_rule": (str, "linearised", lambda v: v in ("linearised", "ratio"),
                          "BGK rate rule: linearised or ratio"),
    "penalty.beta0": (float, 1.0, lambda v: v > 0.5, "Fokker-Planck penalty factor (> 1/2)"),
    "penalty.mu_margin": (float, 1.1, lambda v: v >= 1, "linear penalty margin"),
    "penalty.cg_rtol": (float, 1e-10, _pos, "CG relative tolerance"),
    "penalty.cg_maxiter": (int, 5000, _pos, "CG iteration cap"),
    "scheme.heavy_moment_power": (int, 1, lambda v: v in (1, 2), "dt/eps^p in the heavy moment update"),
    "scheme.light_momentum": (str, "penalised", lambda v: v in ("penalised", "explicit"),
                              "penalised or explicit"),
    "light.n": (float, 1.0, _pos, "light density"),
    "light.u": (_vec, (0.0, 0.0, 0.0), None, "light bulk velocity"),
    "light.T": (float, 1.0, _pos, "light temperature"),
    "heavy.n": (float, 1.0, _pos, "heavy density"),
    "heavy.u": (_vec, (0.0, 0.0, 0.0), None, "heavy bulk velocity"),
    "heavy.T": (float, 2.0, _pos, "heavy temperature"),
    "init.perturbation": (float, 0.0, _nonneg, "relative density perturbation amplitude"),
    "init.well_prepared": (_bool, False, None, "start f_L1 from the friction-balancing profile"),
    "force.L": (_vec, (0.0, 0.0, 0.0), None, "light force"),
    "force.H": (_vec, (0.0, 0.0, 0.0), None, "heavy force"),
    "output.csv": (str, "run.csv", None, "time-series path"),
    "output.every": (int, 1, _pos, "steps between samples"),
    "output.snapshot": (str, "", None, "snapshot path prefix (empty: none)"),
    "output.snapshot_every": (int, 0, _nonneg, "steps between snapshots (0: final only)"),
    "output.cells": (_bool, False, None, "also write a per-cell CSV (inhomogeneous)"),
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated configuration: every key of ``SCHEMA`` with its resolved value."""

    values: dict

    def __getitem__(self, key):
        return self.values[key]

    def lines(self):
        out = []
        for k in SCHEMA:
            v = self.values[k]
            if isinstance(v, tuple):
                v = ", ".join(repr(x) for x in v)
            elif isinstance(v, bool):
                v = str(v).lower()
            out.append(f"{k} = {v}")
        return out

    def replace(self, **changes):
        """Copy with keys changed; dots in keys are written as ``__``."""
        vals = dict(self.values)
        for k, v in changes.items():
            vals[k.replace("__", ".")] = v
        return validate(vals)


def validate(values):
    for key, (_, _, check, desc) in SCHEMA.items():
        if check is not None and not check(values[key]):
            raise ValidationError(key, f"invalid value {values[key]!r}, expected {desc}")
    if values["model.kind"] == "boltzmann" and not -2.0 <= values["kernel.gamma"] <= 1.0:
        raise ValidationError("kernel.gamma", "Boltzmann kernels need gamma in [-2, 1]")
    if values["mode"] == "inhomogeneous":
        bound = values["mesh.cfl"] * values["mesh.dx"] / values["grid.v_max"]
        if values["dt"] > bound:
            raise ValidationError("dt", f"exceeds the transport bound {bound:.6g}")
    return ScenarioConfig(dict(values))


def parse_config(text):
    """Parse config text into a validated :class:`ScenarioConfig`."""
    raw = {}
    section = ""
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
            continue
        if "=" not in s:
            raise ParseError(f"expected 'key = value', got {s!r}", line=lineno)
        k, v = (p.strip() for p in s.split("=", 1))
        key = f"{section}.{k}" if section else k
        if key not in SCHEMA:
            raise ParseError(f"unknown key {key!r}", line=lineno, key=key)
        if key in raw:
            raise ParseError(f"duplicate key {key!r}", line=lineno, key=key)
        try:
            raw[key] = SCHEMA[key][0](v)
        except ValueError as exc:
            raise ValidationError(key, f"cannot read {v!r}: {exc}") from None
    values = {k: raw.get(k, spec[1]) for k, spec in SCHEMA.items()}
    return validate(values)


def load_config(path):
    return parse_config(Path(path).read_text())


# ----------------------------------------------------------------- building

def build_model(cfg):
    grid = VelocityGrid(cfg["grid.v_max"], cfg["grid.n"])
    if cfg["model.kind"] == "fpl":
        k = FPLKernel(gamma=cfg["kernel.gamma"], delta=cfg["kernel.delta"] or 1e-6 * grid.v_max)
    else:
        k = BoltzKernel(gamma=cfg["kernel.gamma"], b0=cfg["kernel.b0"],
                        sphere_order=cfg["kernel.sphere_order"], delta=cfg["kernel.delta"])
    return CollisionModel(grid, cfg["model.kind"], k, conservative=cfg["model.conservative"])


def build_scheme(cfg, model=None):
    model = build_model(cfg) if model is None else model
    pen = pn.PenaltyConfig(beta_rule=cfg["penalty.beta_rule"], beta0=cfg["penalty.beta0"],
                           mu_margin=cfg["penalty.mu_margin"],
                           cg_rtol=cfg["penalty.cg_rtol"], cg_maxiter=cfg["penalty.cg_maxiter"])
    return aph.SchemeConfig(dt=cfg["dt"], model=model, penalty=pen,
                            heavy_moment_power=cfg["scheme.heavy_moment_power"],
                            light_momentum=cfg["scheme.light_momentum"])


def _species(cfg, name):
    return cfg[f"{name}.n"], cfg[f"{name}.u"], cfg[f"{name}.T"]


def initial_state(cfg, grid):
    """Homogeneous split state; a nonzero perturbation multiplies f_{L,0} by 1 + a r(v)."""
    state = aph.SplitState.from_maxwellians(grid, cfg["eps"], _species(cfg, "light"),
                                            _species(cfg, "heavy"), cfg["init.well_prepared"])
    a = cfg["init.perturbation"]
    if a > 0:
        rng = np.random.default_rng(cfg["seed"])
        fL0 = state.fL0 * (1.0 + a * rng.uniform(-1.0, 1.0, grid.shape))
        state = aph.SplitState(fL0, state.fL1, state.fH0, state.fH1, compute_moments(fL0, grid),
                               state.momH0, state.eps)
    return state


def initial_fields(cfg, grid):
    """Cell states with light density n (1 + a sin(2 pi x / L))."""
    mesh = api.SpatialMesh(cfg["mesh.nx"], cfg["mesh.dx"], cfg["mesh.periodic"])
    n, u, T = _species(cfg, "light")
    a = cfg["init.perturbation"]
    light = [(n * (1.0 + a * np.sin(2 * np.pi * x / mesh.length)), u, T) for x in mesh.centers]
    heavy = [_species(cfg, "heavy")] * mesh.nx
    states = [aph.SplitState.from_maxwellians(grid, cfg["eps"], l, h, cfg["init.well_prepared"])
              for l, h in zip(light, heavy)]
    return api.FieldArray.from_cells(states, cfg["force.L"], cfg["force.H"]), mesh


# ------------------------------------------------------------------ samples

def _macro_row(mom):
    p0, p1, p2 = mom[0], mom[1:4], mom[4]
    u = p1 / p0
    T = (2.0 * p2 / p0 - np.dot(u, u)) / 3.0
    return [p0, *u, T]


def sample_homogeneous(state, grid, info=None):
    fL, fH = aph.reconstruct(state)
    mL = compute_moments(fL, grid).as_array()
    mH = compute_moments(fH, grid).as_array()
    neg = (aph.negative_nodes(state.fL0), aph.negative_nodes(state.fH0))
    return [state.t, *_macro_row(mL), *_macro_row(mH), mL[0], mH[0], mL[4] + mH[4], *neg]


def sample_inhomogeneous(fields, mesh, grid):
    """Cell-summed moments of the reconstructed fields (x-averaged series)."""
    e = fields.eps
    mL = api.cell_moments(fields.fL0 + e * fields.fL1, grid).mean(axis=0)
    mH = api.cell_moments(fields.fH0 + e * fields.fH1, grid).mean(axis=0)
    neg = (aph.negative_nodes(fields.fL0), aph.negative_nodes(fields.fH0))
    return [fields.t, *_macro_row(mL), *_macro_row(mH), mL[0], mH[0], mL[4] + mH[4], *neg]


def sample_oracle(m):
    e = m.thermal_energy + 0.5 * m.n_H * float(np.dot(m.u_H, m.u_H))
    return [m.t, m.n_L, 0.0, 0.0, 0.0, m.T_L, m.n_H, *m.u_H, m.T_H, m.n_L, m.n_H, e, 0, 0]


def _fmt(row):
    out = []
    for i, v in enumerate(row):
        out.append(str(int(v)) if CSV_COLUMNS[i].startswith("neg") else repr(float(v)))
    return ",".join(out)


# ---------------------------------------------------------------- snapshots

def write_snapshot(path, array, t, eps, x_length, v_max):
    a = np.ascontiguousarray(array, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<q", a.ndim))
        fh.write(struct.pack(f"<{a.ndim}q", *a.shape))
        fh.write(struct.pack("<4d", t, eps, x_length, v_max))
        fh.write(a.tobytes())


def read_snapshot(path):
    """Returns (array, meta) with meta keys t, eps, x_length, v_max."""
    with open(path, "rb") as fh:
        if fh.read(8) != SNAPSHOT_MAGIC:
            raise ParseError(f"{path} is not a snapshot file")
        (ndim,) = struct.unpack("<q", fh.read(8))
        dims = struct.unpack(f"<{ndim}q", fh.read(8 * ndim))
        t, eps, xl, vm = struct.unpack("<4d", fh.read(32))
        a = np.frombuffer(fh.read(), dtype="<f8").reshape(dims)
    return a, {"t": t, "eps": eps, "x_length": xl, "v_max": vm}


# --------------------------------------------------------------------- runs

def set_threads_from_env():
    """Apply the thread count from ``MIXTURE_AP_THREADS`` if it is set."""
    val = os.environ.get(THREADS_ENV)
    if not val:
        return None
    import numba

    n = int(val)
    if n < 1:
        raise ValidationError(THREADS_ENV, f"thread count must be positive, got {n}")
    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    return n


def _steps(cfg):
    n = int(round(cfg["t_end"] / cfg["dt"]))
    if not np.isclose(n * cfg["dt"], cfg["t_end"], rtol=0, atol=1e-9 * max(1.0, cfg["t_end"])):
        raise ValidationError("t_end", f"{cfg['t_end']} is not a whole number of steps of {cfg['dt']}")
    return n


def run_scenario(cfg, stream=None):
    """Run a homogeneous, inhomogeneous or oracle scenario.

    Writes the CSV to ``output.csv`` (or to ``stream`` if given) and returns
    an exit status: 0 on success, 2 when the solver fails, in which case the
    rows produced so far are kept and a truncation marker is appended.
    """
    steps = _steps(cfg)
    own = stream is None
    out = open(cfg["output.csv"], "w") if own else stream
    cell_out = None
    try:
        for line in cfg.lines():
            out.write(f"# {line}\n")
        out.write(",".join(CSV_COLUMNS) + "\n")
        every = cfg["output.every"]
        try:
            if cfg["mode"] == "oracle":
                model = build_model(cfg)
                m = lo.MacroState(cfg["light.n"], cfg["light.T"], cfg["heavy.n"], cfg["heavy.u"],
                                  cfg["heavy.T"])
                out.write(_fmt(sample_oracle(m)) + "\n")
                for k in range(1, steps + 1):
                    m = lo.relax_step_implicit(m, cfg["dt"], model)
                    if k % every == 0 or k == steps:
                        out.write(_fmt(sample_oracle(m)) + "\n")
            elif cfg["mode"] == "homogeneous":
                scheme = build_scheme(cfg)
                grid = scheme.model.grid
                s = initial_state(cfg, grid)
                out.write(_fmt(sample_homogeneous(s, grid)) + "\n")
                for k in range(1, steps + 1):
                    s = aph.ap_step(s, scheme)
                    if k % every == 0 or k == steps:
                        out.write(_fmt(sample_homogeneous(s, grid)) + "\n")
                        out.flush()
                    _maybe_snapshot(cfg, k, steps, np.stack([s.fL0, s.fL1, s.fH0, s.fH1]), s.t, 0.0,
                                    grid.v_max)
            elif cfg["mode"] == "inhomogeneous":
                scheme = build_scheme(cfg)
                grid = scheme.model.grid
                fields, mesh = initial_fields(cfg, grid)
                icfg = api.InhomConfig(scheme, mesh, cfg["mesh.cfl"])
                if cfg["output.cells"] and own:
                    cell_out = open(Path(cfg["output.csv"]).with_suffix(".cells.csv"), "w")
                    cell_out.write("t,cell," + ",".join(CSV_COLUMNS[1:6]) + "," + ",".join(CSV_COLUMNS[6:11]) + "\n")
                out.write(_fmt(sample_inhomogeneous(fields, mesh, grid)) + "\n")
                _cells(cell_out, fields, grid)
                for k in range(1, steps + 1):
                    fields = api.full_step(fields, icfg)
                    if k % every == 0 or k == steps:
                        out.write(_fmt(sample_inhomogeneous(fields, mesh, grid)) + "\n")
                        out.flush()
                        _cells(cell_out, fields, grid)
                    _maybe_snapshot(cfg, k, steps,
                                    np.stack([fields.fL0, fields.fL1, fields.fH0, fields.fH1]),
                                    fields.t, mesh.length, grid.v_max)
            else:
                raise ValidationError("mode", "compare mode is run through compare_runs")
        except (ConfigError, MismatchedSeries):
            raise
        except (MixtureError, FloatingPointError, np.linalg.LinAlgError) as exc:
            out.write(f"# TRUNCATED: {type(exc).__name__}: {exc}\n")
            return EXIT_SOLVER
        return EXIT_OK
    finally:
        if own:
            out.close()
        if cell_out is not None:
            cell_out.close()


def _cells(fh, fields, grid):
    if fh is None:
        return
    e = fields.eps
    mL = api.cell_moments(fields.fL0 + e * fields.fL1, grid)
    mH = api.cell_moments(fields.fH0 + e * fields.fH1, grid)
    for i in range(fields.nx):
        vals = [*_macro_row(mL[i]), *_macro_row(mH[i])]
        fh.write(f"{fields.t!r},{i}," + ",".join(repr(float(v)) for v in vals) + "\n")


def _maybe_snapshot(cfg, k, steps, array, t, x_length, v_max):
    prefix = cfg["output.snapshot"]
    if not prefix:
        return
    every = cfg["output.snapshot_every"]
    if k == steps or (every and k % every == 0):
        write_snapshot(f"{prefix}_{k:06d}.bin", array, t, cfg["eps"], x_length, v_max)


# --------------------------------------------------------------- comparison

def read_series(source):
    """Read a CSV written by :func:`run_scenario`; returns (columns, rows, truncated)."""
    text = Path(source).read_text() if not isinstance(source, io.StringIO) else source.getvalue()
    header, rows, truncated = None, [], False
    for line in text.splitlines():
        if line.startswith("# TRUNCATED"):
            truncated = True
            continue
        if not line or line.startswith("#"):
            continue
        if header is None:
            header = tuple(line.split(","))
            continue
        rows.append([float(x) for x in line.split(",")])
    if header is None:
        raise ParseError(f"{source}: no header line")
    return header, np.array(rows).reshape(-1, len(header)), truncated


def parse_tolspec(spec):
    """'0.05' (all columns) or 'T_L=0.05,T_H=0.05[,interp]' -> (tolerances, interp)."""
    tol, interp = {}, False
    for part in (p.strip() for p in spec.split(",") if p.strip()):
        if part == "interp":
            interp = True
        elif "=" in part:
            k, v = part.split("=", 1)
            tol[k.strip()] = float(v)
        else:
            tol["*"] = float(part)
    if not tol:
        raise ParseError(f"tolerance spec {spec!r} names no tolerance")
    return tol, interp


def compare_runs(a, b, tolspec, interp=False):
    """Per-column max relative error of series ``a`` against ``b``.

    ``a``, ``b`` are (columns, rows) pairs or CSV paths; ``tolspec`` is a
    dict column -> tolerance ("*" matches every column except t) or a string
    for :func:`parse_tolspec`.  Returns a report dict with ``errors``,
    ``failed`` and ``passed``.
    """
    if isinstance(tolspec, str):
        tolspec, flag = parse_tolspec(tolspec)
        interp = interp or flag
    ca, ra = (a[0], a[1]) if isinstance(a, tuple) else read_series(a)[:2]
    cb_, rb = (b[0], b[1]) if isinstance(b, tuple) else read_series(b)[:2]
    if tuple(ca) != tuple(cb_):
        raise MismatchedSeries("the two series have different columns")
    ta, tb = ra[:, 0], rb[:, 0]
    aligned = len(ta) == len(tb) and np.allclose(ta, tb, rtol=1e-12, atol=1e-12)
    if not aligned and not interp:
        raise MismatchedSeries("time stamps differ; pass the interp flag to interpolate")
    if not aligned:
        if ta[0] < tb[0] - 1e-12 or ta[-1] > tb[-1] + 1e-12:
            raise MismatchedSeries("series a extends beyond the time range of series b")
        rb = np.stack([np.interp(ta, tb, rb[:, j]) for j in range(rb.shape[1])], axis=1)
    errors = {}
    for j, name in enumerate(ca):
        if name == "t":
            continue
        scale = float(np.max(np.abs(rb[:, j]))) if len(rb) else 0.0
        diff = float(np.max(np.abs(ra[:, j] - rb[:, j]))) if len(ra) else 0.0
        errors[name] = diff / scale if scale > 0 else diff
    failed = []
    for name, err in errors.items():
        tol = tolspec.get(name, tolspec.get("*"))
        if tol is not None and not err <= tol:
            failed.append(name)
    return {"errors": errors, "failed": failed, "passed": not failed}


def observed_orders(errors, factor=2.0):
    """log(e_k / e_{k+1}) / log(factor) along a refinement ladder."""
    e = np.asarray(errors, dtype=float)
    return np.log(e[:-1] / e[1:]) / np.log(factor)


def report_json(report):
    return json.dumps(report, indent=2, sort_keys=True)
