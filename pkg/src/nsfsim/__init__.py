"""Finite-difference solver for a compressible, viscous, heat-conducting gas
in a box, with energy-budget diagnostics and a regularity monitor."""

import os as _os

# NSF_THREADS caps library threads; it has to be applied before numpy loads.
_threads = _os.environ.get("NSF_THREADS", "0").strip()
if _threads.isdigit() and int(_threads) > 0:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .constitutive import PhysParams, PositivityError  # noqa: E402
from .diagnostics import DiagnosticsRecord, compute_D0, record  # noqa: E402
from .elliptic import EllipticSolverConfig, EllipticSolveError  # noqa: E402
from .grid import Grid  # noqa: E402
from .integrator import StepConfig, run, stability_bound, step  # noqa: E402
from .monitor import MonitorConfig, RegularityMonitor, RegularityReport  # noqa: E402
from .state import BoundaryData, FluidState, PositivityLost  # noqa: E402

__all__ = [
    "BoundaryData", "DiagnosticsRecord", "EllipticSolveError", "EllipticSolverConfig",
    "FluidState", "Grid", "MonitorConfig", "PhysParams", "PositivityError",
    "PositivityLost", "RegularityMonitor", "RegularityReport", "StepConfig",
    "compute_D0", "record", "run", "stability_bound", "step",
]
__version__ = "0.1.0"
