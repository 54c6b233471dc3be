"""High-level model runs: engine selection, control schedules, error mapping.

This is the seam between the user-facing API and the drivers in
:mod:`ebofrac.kernels`; everything here works with :class:`ModelParams`,
:class:`State8` and :class:`Trajectory` values rather than raw arrays.
"""
from __future__ import annotations

import math
from typing import Optional, Tuple, Union

import numpy as np

from . import kernels
from .integrators import IntegrationError, IntegratorConfig, Trajectory
from .params import ControlVector, ModelParams, State8

INTEGRATOR_CHOICES = ("auto", "rkf45", "abm")
DEFAULT_ABM_STEP = 0.05

_STATUS_TEXT = {
    1: "step budget exhausted before reaching the end time",
    2: "step underflow: minimum step still fails the error test",
    3: "state left the admissible region",
}

Controls = Union[ControlVector, Tuple[np.ndarray, np.ndarray], None]


def resolve_integrator(name: str, alpha: float) -> str:
    """Map the 'auto' choice to a concrete engine for the given order."""
    if name not in INTEGRATOR_CHOICES:
        raise ValueError(f"integrator must be one of {INTEGRATOR_CHOICES}, got {name!r}")
    if name == "auto":
        return "rkf45" if alpha == 1.0 else "abm"
    return name


def default_abm_steps(t0: float, T: float) -> int:
    return max(2, math.ceil((T - t0) / DEFAULT_ABM_STEP))


def _schedule_arrays(controls: Controls, t0: float, T: float):
    """Normalize the controls argument to (times, values) kernel arrays."""
    if controls is None:
        return None, None
    if isinstance(controls, ControlVector):
        controls.validate()
        values = np.tile(controls.as_array(), (2, 1))
        return np.array([t0, T]), values
    times, values = controls
    times = np.ascontiguousarray(times, dtype=np.float64)
    values = np.ascontiguousarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != 4 or len(times) != len(values):
        raise ValueError("control schedule must pair (n,) times with (n, 4) values")
    return times, values


def _state_array(y0) -> np.ndarray:
    if isinstance(y0, State8):
        return y0.as_array()
    arr = np.ascontiguousarray(y0, dtype=np.float64)
    if arr.shape != (8,):
        raise ValueError(f"initial state must have 8 entries, got shape {arr.shape}")
    return arr


def _check_status(status: int, cfg: Optional[IntegratorConfig],
                  partial: Trajectory) -> None:
    if status == 0:
        return
    text = _STATUS_TEXT.get(status, f"driver failure (status {status})")
    if status == 1 and cfg is not None:
        text = f"max_steps={cfg.max_steps}: {text}"
    raise IntegrationError(text, partial)


def simulate_model(params: ModelParams, y0, T: float, t0: float = 0.0,
                   integrator: str = "auto",
                   config: Optional[IntegratorConfig] = None,
                   n_steps: Optional[int] = None,
                   controls: Controls = None) -> Trajectory:
    """Integrate the model over [t0, T] and return the stored trajectory.

    ``integrator`` selects the engine: 'rkf45' (adaptive, classical order),
    'abm' (uniform-grid fractional predictor-corrector) or 'auto', which
    picks by the order alpha.  ``controls`` may be a constant
    :class:`ControlVector` or a ``(times, values)`` schedule; omitted
    controls run the uncontrolled system.
    """
    if T <= t0:
        raise ValueError("need T > t0")
    engine = resolve_integrator(integrator, params.alpha)
    par = params.as_array()
    y = _state_array(y0)
    u_times, u_values = _schedule_arrays(controls, t0, T)

    if engine == "rkf45":
        cfg = config or IntegratorConfig()
        times, states, derivs, accepted, rejected, status = kernels.rkf45_model(
            par, y, t0, T, cfg.rel_tol, cfg.abs_tol, cfg.h_min, cfg.h_max,
            cfg.h_init, cfg.safety, cfg.error_exponent, cfg.max_steps,
            u_times, u_values)
        traj = Trajectory(times, states, derivs, accepted, rejected, "rkf45")
        _check_status(status, cfg, traj)
        return traj

    steps = n_steps if n_steps is not None else default_abm_steps(t0, T)
    times, states, derivs, status = kernels.abm_model(
        par, y, t0, T, params.alpha, steps, u_times, u_values)
    traj = Trajectory(times, states, derivs, int(len(times)) - 1, 0, "abm")
    _check_status(status, None, traj)
    return traj
