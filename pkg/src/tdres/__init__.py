"""Time-dependent resonance control of nearly-adiabatic two-level systems.

Numerics and closed-form analytics for suppressing (or enhancing)
nonadiabatic transitions in swept two-level models with a drive whose
instantaneous frequency tracks twice the energy gap: Stokes geometry in
complex time, first-order transition predictors, optimal drive amplitudes,
an adjoint-based optimal-control solver, and finite-interval annealing-type
and multi-level extensions.
"""

__version__ = "0.1.0"

from .core import (ControlFunction, EigenFrame, ModelParams, QuantumState,
                   StepControl, Trajectory, eigenframe, free_energy, free_sweep,
                   ground_state, propagate, transition_probability)
from .errors import ConfigError, ConvergenceError, NumericalError, StepUnderflowError
from .stokes import (StokesGeometry, StokesLine, TurningPoint, build_geometry,
                     connection_matrix, imaginary_action, real_axis_crossings,
                     trace_stokes_line, turning_points, wkb_transition_amplitude)

__all__ = [
    "ConfigError", "ControlFunction", "ConvergenceError", "EigenFrame",
    "ModelParams", "NumericalError", "QuantumState", "StepControl",
    "StokesGeometry", "StokesLine", "Trajectory", "TurningPoint",
    "StepUnderflowError",
    "build_geometry", "connection_matrix", "eigenframe", "free_energy",
    "free_sweep", "ground_state", "imaginary_action", "propagate",
    "real_axis_crossings", "trace_stokes_line", "transition_probability",
    "turning_points", "wkb_transition_amplitude", "__version__",
]
