"""Pure-Python model drivers, used when the compiled extension is unavailable.

Same call signatures and status-code conventions as the compiled module:
status 0 = reached T, 1 = max_steps exceeded, 2 = step underflow,
3 = state left the admissible region.
"""
from __future__ import annotations

import numpy as np

from ..integrators import (IntegrationError, IntegratorConfig, abm_fractional_solve,
                           hermite_eval, rkf45_solve)
from ..model import adjoint_rates, rhs_controlled, rhs_uncontrolled
from ..params import ModelParams

COMPILED = False


def _status_from(err: IntegrationError) -> int:
    text = str(err)
    if "max_steps" in text:
        return 1
    if "underflow" in text:
        return 2
    return 3


def _controls_at(u_times: np.ndarray, u_values: np.ndarray, t: float) -> np.ndarray:
    return np.array([np.interp(t, u_times, u_values[:, j]) for j in range(4)])


def _model_rhs(par: np.ndarray, u_times, u_values):
    params = ModelParams(*par)
    if u_times is None:
        def rhs(t, y):
            return rhs_uncontrolled(t, y, params)
    else:
        def rhs(t, y):
            u = _controls_at(u_times, u_values, t)
            return rhs_controlled(t, y, params, u, check_bounds=False)
    return rhs


def rkf45_model(par, y0, t0, T, rel_tol, abs_tol, h_min, h_max, h_init,
                safety, error_exponent, max_steps, u_times=None, u_values=None):
    """Adaptive forward solve of the (possibly controlled) model."""
    cfg = IntegratorConfig(rel_tol, abs_tol, h_min, h_max, h_init,
                           safety, error_exponent, max_steps)
    rhs = _model_rhs(np.asarray(par, dtype=np.float64), u_times, u_values)
    try:
        traj = rkf45_solve(rhs, y0, t0, T, cfg, clip_negative=True)
        status = 0
    except IntegrationError as err:
        traj = err.partial
        status = _status_from(err)
    return (traj.times, traj.states, traj.derivs, traj.accepted, traj.rejected, status)


def abm_model(par, y0, t0, T, alpha, n_steps, u_times=None, u_values=None):
    """Fractional predictor-corrector forward solve on a uniform grid."""
    rhs = _model_rhs(np.asarray(par, dtype=np.float64), u_times, u_values)
    try:
        traj = abm_fractional_solve(rhs, y0, t0, T, alpha, n_steps, clip_negative=True)
        status = 0
    except IntegrationError as err:
        traj = err.partial
        status = _status_from(err)
    return (traj.times, traj.states, traj.derivs, status)


def rkf45_adjoint(par, burden, fwd_times, fwd_states, fwd_derivs,
                  u_times, u_values, T, rel_tol, abs_tol, h_min, h_max,
                  h_init, safety, error_exponent, max_steps):
    """Backward costate solve on the reversed clock tau = T - t.

    Integrates d(lam)/d(tau) = +dH/dx from lam(tau=0) = 0, reading the
    forward state from its dense output and the controls from the schedule.
    Returns the solution on the tau grid together with tau-derivatives.
    """
    par = np.asarray(par, dtype=np.float64)
    params = ModelParams(*par)
    burden = np.asarray(burden, dtype=np.float64)
    t_query = np.empty(1)

    def rhs(tau, lam):
        t_query[0] = T - tau
        y = hermite_eval(fwd_times, fwd_states, fwd_derivs, t_query)[0]
        u = _controls_at(u_times, u_values, T - tau)
        return -adjoint_rates(lam, y, u, params, burden)

    cfg = IntegratorConfig(rel_tol, abs_tol, h_min, h_max, h_init,
                           safety, error_exponent, max_steps)
    try:
        traj = rkf45_solve(rhs, np.zeros(8), 0.0, T, cfg)
        status = 0
    except IntegrationError as err:
        traj = err.partial
        status = _status_from(err)
    return (traj.times, traj.states, traj.derivs, traj.accepted, traj.rejected, status)
