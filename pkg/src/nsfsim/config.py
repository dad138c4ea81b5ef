"""Run configuration: ``[section]`` headers and ``key = value`` lines.

Every key, its type and its default is listed in :data:`SCHEMA`; unknown
sections or keys are errors. :func:`serialize` writes every key, so
``parse_config(serialize(cfg)) == cfg``.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .constitutive import PhysParams
from .elliptic import EllipticSolverConfig
from .grid import Grid
from .integrator import SCHEMES, StepConfig, stability_bound
from .monitor import MonitorConfig
from .state import BoundaryData, FluidState


class ConfigError(ValueError):
    pass


def _floats3(s: str) -> tuple:
    parts = s.split()
    if len(parts) != 3:
        raise ValueError("expected three numbers")
    return tuple(float(p) for p in parts)


def _ints3(s: str) -> tuple:
    parts = s.split()
    if len(parts) != 3:
        raise ValueError("expected three integers")
    return tuple(int(p) for p in parts)


def _bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true/false")


def _dt(s: str):
    return "auto" if s.strip() == "auto" else float(s)


def _choice(*options):
    def parse(s: str) -> str:
        s = s.strip()
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return s
    parse.options = options
    return parse


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return " ".join(_fmt(x) for x in v)
    return str(v)


_REQUIRED = object()

# section -> key -> (parser, default, help)
SCHEMA: dict[str, dict[str, tuple]] = {
    "grid": {
        "extents": (_floats3, (1.0, 1.0, 1.0), "box side lengths"),
        "cells": (_ints3, (16, 16, 16), "cells per axis (>= 4)"),
    },
    "params": {
        "mu": (float, 1.0, "shear viscosity, > 0"),
        "eta": (float, 0.0, "bulk viscosity, >= 0"),
        "kappa": (float, 1.0, "heat conductivity, > 0"),
        "cv": (float, 1.5, "specific heat at constant volume, > 0"),
    },
    "initial": {
        "preset": (_choice("equilibrium", "perturbed", "snapshot"), "equilibrium",
                   "initial state: extensions of the wall data, plus a bump for 'perturbed'"),
        "rho": (float, 1.0, "uniform initial density for the presets"),
        "amplitude": (float, 0.1, "temperature bump amplitude for 'perturbed'"),
        "snapshot": (str, "", "snapshot file for preset = snapshot"),
    },
    "boundary": {
        "theta": (_choice("constant", "hot-face", "snapshot"), "constant",
                  "wall temperature preset"),
        "theta_value": (float, 1.0, "wall temperature for 'constant'"),
        "theta_bottom": (float, 2.0, "hot-face: temperature at the low wall of hot_axis"),
        "theta_top": (float, 1.0, "hot-face: temperature at the high wall of hot_axis"),
        "hot_axis": (_choice("x", "y", "z"), "z", "hot-face gradient direction"),
        "velocity": (_choice("none", "tangential-shear", "snapshot"), "none",
                     "wall velocity preset"),
        "shear_speed": (float, 1.0, "lid speed for 'tangential-shear' (lid is the top z wall)"),
        "snapshot": (str, "", "snapshot file whose wall values give theta_B and/or u_B"),
    },
    "force": {
        "vector": (_floats3, (0.0, 0.0, 0.0), "uniform body force"),
    },
    "time": {
        "t_end": (float, _REQUIRED, "final time"),
        "dt": (_dt, "auto", "time step, or 'auto' for cfl_safety times the initial bound"),
        "cfl_safety": (float, 0.25, "safety factor applied to the stability bound, in (0, 1]"),
        "scheme": (_choice(*SCHEMES), "explicit-rk2", "time scheme"),
        "implicit_weight": (float, 0.5, "implicit weight of diffusion for semi-implicit-theta"),
    },
    "diagnostics": {
        "interval": (int, 10, "steps between diagnostics records"),
        "decompose": (_bool, True, "compute the velocity decomposition in records"),
    },
    "monitor": {
        "window": (int, 50, "trailing samples used for the trend fit"),
        "growth_factor": (float, 4.0, "growth across the window that flags growth"),
        "min_samples": (int, 8, "samples needed before classifying"),
        "fit_threshold": (float, 0.99, "R^2 needed for suspected blow-up"),
    },
    "solver": {
        "tol": (float, 1e-10, "relative residual of elliptic solves"),
        "max_iter": (int, 0, "elliptic iteration cap, 0 = 20 N^(2/3)"),
        "method": (_choice("conjugate-direction", "damped-relaxation"), "conjugate-direction",
                   "elliptic method"),
    },
    "check": {
        "compat_tol": (float, 1e-6, "max compatibility residual accepted by run/check"),
    },
    "output": {
        "dir": (str, "output", "output directory"),
        "snapshot_every": (int, 0, "steps between snapshots, 0 = final only"),
    },
}


def help_text() -> str:
    lines = ["configuration keys (section.key = default: meaning):"]
    for sec, keys in SCHEMA.items():
        for key, (_, default, doc) in keys.items():
            d = "(required)" if default is _REQUIRED else _fmt(default)
            lines.append(f"  [{sec}] {key} = {d}: {doc}")
    return "\n".join(lines)


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)
    base_dir: Optional[Path] = field(default=None, compare=False)

    def __getitem__(self, dotted: str) -> Any:
        sec, key = dotted.split(".")
        return self.values[sec][key]

    # builders -------------------------------------------------------------

    def grid(self) -> Grid:
        return Grid(self["grid.extents"], self["grid.cells"])

    def params(self) -> PhysParams:
        p = self.values["params"]
        return PhysParams(mu=p["mu"], eta=p["eta"], kappa=p["kappa"], cv=p["cv"])

    def solver(self) -> EllipticSolverConfig:
        s = self.values["solver"]
        return EllipticSolverConfig(tol=s["tol"], max_iter=s["max_iter"] or None,
                                    method=s["method"])

    def monitor(self) -> MonitorConfig:
        m = self.values["monitor"]
        return MonitorConfig(window=m["window"], growth_factor=m["growth_factor"],
                             min_samples=m["min_samples"], fit_threshold=m["fit_threshold"])

    def resolve(self, p: str) -> Path:
        path = Path(p)
        if not path.is_absolute() and self.base_dir is not None:
            path = self.base_dir / path
        return path


def _check_domain(values: dict, base_dir: Optional[Path]):
    try:
        PhysParams(**values["params"])
    except ValueError as exc:
        raise ConfigError(f"[params] {exc}") from None
    try:
        Grid(values["grid"]["extents"], values["grid"]["cells"])
    except ValueError as exc:
        raise ConfigError(f"[grid] {exc}") from None
    t = values["time"]
    if not t["t_end"] >= 0:
        raise ConfigError(f"[time] t_end = {t['t_end']!r} must be >= 0")
    if t["dt"] != "auto" and not t["dt"] > 0:
        raise ConfigError(f"[time] dt = {t['dt']!r} must be > 0")
    if not 0 < t["cfl_safety"] <= 1:
        raise ConfigError(f"[time] cfl_safety = {t['cfl_safety']!r} must lie in (0, 1]")
    if not 0 < t["implicit_weight"] <= 1:
        raise ConfigError("[time] implicit_weight must lie in (0, 1]")
    if values["diagnostics"]["interval"] < 0:
        raise ConfigError("[diagnostics] interval must be >= 0")
    if values["output"]["snapshot_every"] < 0:
        raise ConfigError("[output] snapshot_every must be >= 0")
    try:
        m = values["monitor"]
        MonitorConfig(window=m["window"], growth_factor=m["growth_factor"],
                      min_samples=m["min_samples"], fit_threshold=m["fit_threshold"])
    except ValueError as exc:
        raise ConfigError(f"[monitor] {exc}") from None
    s = values["solver"]
    if not 0 < s["tol"] < 1:
        raise ConfigError("[solver] tol must lie in (0, 1)")
    if s["max_iter"] < 0:
        raise ConfigError("[solver] max_iter must be >= 0")
    if not values["check"]["compat_tol"] >= 0:
        raise ConfigError("[check] compat_tol must be >= 0")
    needs = []
    if values["initial"]["preset"] == "snapshot":
        needs.append(("initial", "snapshot"))
    if "snapshot" in (values["boundary"]["theta"], values["boundary"]["velocity"]):
        needs.append(("boundary", "snapshot"))
    for sec, key in needs:
        p = values[sec][key]
        if not p:
            raise ConfigError(f"[{sec}] {key} is required by the selected preset")
        path = Path(p)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        if not path.exists():
            raise ConfigError(f"[{sec}] {key} = {p}: file does not exist")


def parse_config(text: str, base_dir=None) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"),
                                       empty_lines_in_values=False, strict=True,
                                       delimiters=("=",))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"line {exc.lineno}: key outside of a [section]") from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"line {exc.lineno}: duplicate section [{exc.section}]") from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"line {exc.lineno}: duplicate key {exc.option!r}") from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else "?"
        raise ConfigError(f"line {lineno}: syntax error, expected 'key = value'") from None

    lines = text.splitlines()

    def where(sec, key=None):
        for i, line in enumerate(lines, start=1):
            s = line.strip()
            if key is None and s == f"[{sec}]":
                return i
            if key is not None and s.split("=")[0].strip() == key:
                return i
        return "?"

    values: dict = {}
    for sec in parser.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"line {where(sec)}: unknown section [{sec}]")
        for key in parser[sec]:
            if key not in SCHEMA[sec]:
                raise ConfigError(f"line {where(sec, key)}: unknown key {key!r} in [{sec}]")
    for sec, keys in SCHEMA.items():
        values[sec] = {}
        for key, (conv, default, _) in keys.items():
            if parser.has_option(sec, key):
                raw = parser.get(sec, key)
                try:
                    values[sec][key] = conv(raw)
                except ValueError as exc:
                    raise ConfigError(
                        f"line {where(sec, key)}: {sec}.{key} = {raw!r}: {exc}") from None
            elif default is _REQUIRED:
                raise ConfigError(f"missing required key {key!r} in [{sec}]")
            else:
                values[sec][key] = default
    base = Path(base_dir) if base_dir is not None else None
    _check_domain(values, base)
    return RunConfig(values, base)


def load_config(path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(), base_dir=path.parent)


def serialize(cfg: RunConfig) -> str:
    out = []
    for sec, keys in SCHEMA.items():
        out.append(f"[{sec}]")
        for key in keys:
            out.append(f"{key} = {_fmt(cfg.values[sec][key])}")
        out.append("")
    return "\n".join(out)


# --------------------------------------------------------------- problems


@dataclass
class Problem:
    grid: Grid
    params: PhysParams
    state0: FluidState
    bdata: BoundaryData
    step: StepConfig
    monitor: MonitorConfig
    solver: EllipticSolverConfig
    t_end: float


def wall_temperature(cfg: RunConfig, grid: Grid) -> np.ndarray:
    b = cfg.values["boundary"]
    if b["theta"] == "constant":
        return np.full(grid.shape, b["theta_value"])
    if b["theta"] == "hot-face":
        axis = "xyz".index(b["hot_axis"])
        coord = grid.coordinates()[axis] / grid.extents[axis]
        return b["theta_bottom"] + (b["theta_top"] - b["theta_bottom"]) * coord
    from .io import read_snapshot
    return np.array(read_snapshot(cfg.resolve(b["snapshot"]), grid).theta)


def tangential_shear(grid: Grid, speed: float) -> np.ndarray:
    """Lid-driven wall velocity: ``u_x = U sin(pi x/Lx) sin(pi y/Ly)`` on the top z wall."""
    X, Y, _ = grid.coordinates()
    u = np.zeros((3, *grid.shape))
    lid = speed * np.sin(np.pi * X / grid.extents[0]) * np.sin(np.pi * Y / grid.extents[1])
    u[0][:, :, -1] = lid[:, :, -1]
    return zero_normal_trace(u)


def zero_normal_trace(u: np.ndarray) -> np.ndarray:
    u = np.array(u, dtype=float)
    u[0][[0, -1], :, :] = 0.0
    u[1][:, [0, -1], :] = 0.0
    u[2][:, :, [0, -1]] = 0.0
    return u


def wall_velocity(cfg: RunConfig, grid: Grid) -> np.ndarray:
    b = cfg.values["boundary"]
    if b["velocity"] == "none":
        return np.zeros((3, *grid.shape))
    if b["velocity"] == "tangential-shear":
        return tangential_shear(grid, b["shear_speed"])
    from .io import read_snapshot
    return np.array(read_snapshot(cfg.resolve(b["snapshot"]), grid).u)


def cube_bump(grid: Grid) -> np.ndarray:
    """``(sin sin sin)^3``: vanishes on the walls with its gradient and Laplacian."""
    X, Y, Z = grid.coordinates()
    L = grid.extents
    s = np.sin(np.pi * X / L[0]) * np.sin(np.pi * Y / L[1]) * np.sin(np.pi * Z / L[2])
    return s**3


def build_problem(cfg: RunConfig) -> Problem:
    grid = cfg.grid()
    params = cfg.params()
    solver = cfg.solver()
    force = np.broadcast_to(np.array(cfg["force.vector"]).reshape(3, 1, 1, 1),
                            (3, *grid.shape)).copy()
    bdata = BoundaryData.create(grid, wall_temperature(cfg, grid), wall_velocity(cfg, grid),
                                force, params, solver)
    ini = cfg.values["initial"]
    if ini["preset"] == "snapshot":
        from .io import read_snapshot
        state0 = read_snapshot(cfg.resolve(ini["snapshot"]), grid)
    else:
        theta = np.array(bdata.theta_ext)
        if ini["preset"] == "perturbed":
            theta = theta + ini["amplitude"] * float(np.min(theta)) * cube_bump(grid)
        state0 = FluidState(grid, 0.0, np.full(grid.shape, ini["rho"]), theta,
                            np.array(bdata.u_ext))
    t = cfg.values["time"]
    dt = t["dt"]
    if dt == "auto":
        dt = t["cfl_safety"] * stability_bound(state0, params, t["scheme"])
        if t["t_end"] > 0:
            dt = t["t_end"] / math.ceil(t["t_end"] / dt)
    step = StepConfig(dt=dt, cfl_safety=t["cfl_safety"], scheme=t["scheme"],
                      implicit_weight=t["implicit_weight"], solver=solver)
    return Problem(grid, params, state0, bdata, step, cfg.monitor(), solver, t["t_end"])
