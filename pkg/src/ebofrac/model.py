"""Right-hand sides of the uncontrolled and controlled fractional systems.

These are the reference implementations, written for clarity and used by the
analysis routines and the pure-Python integration fallback.  The compiled
kernels in :mod:`ebofrac.kernels` mirror them statement for statement.
"""
from __future__ import annotations

import numpy as np

from .params import ControlVector, ModelParams, State8


def _as_array(state) -> np.ndarray:
    if isinstance(state, State8):
        return state.as_array()
    return np.asarray(state, dtype=np.float64)


def force_of_infection(state, params: ModelParams) -> float:
    """Per-susceptible infection rate beta*(Is + eta_a*Ia + eta_d*D)/N_L.

    The normalizing population is the living one; the deceased still
    transmit through the eta_d*D term in the numerator.
    """
    y = _as_array(state)
    n_living = y[0] + y[1] + y[2] + y[3] + y[4] + y[5] + y[7]
    if n_living <= 0.0:
        raise ValueError(f"living population must be positive, got {n_living}")
    return params.beta * (y[3] + params.eta_a * y[4] + params.eta_d * y[6]) / n_living


def rhs_uncontrolled(t: float, state, params: ModelParams) -> np.ndarray:
    """Rates of change of (S, V, E, Is, Ia, H, D, R) without interventions."""
    y = _as_array(state)
    S, V, E, Is, Ia, H, D, R = y
    lam = force_of_infection(y, params)
    return np.array([
        params.Lambda - lam * S + params.omega * V - params.q0 * S,
        params.v * S - (1.0 - params.epsilon) * lam * V - params.q1 * V,
        lam * (S + (1.0 - params.epsilon) * V) - params.q2 * E,
        params.p * params.sigma * E - params.q3 * Is,
        (1.0 - params.p) * params.sigma * E - params.q4 * Ia,
        params.h_s * Is - params.q5 * H,
        params.delta_s * Is + params.delta_h * H - params.mu_d * D,
        params.gamma_s * Is + params.gamma_a * Ia + params.gamma_h * H - params.mu * R,
    ])


def rhs_controlled(t: float, state, params: ModelParams, u,
                   check_bounds: bool = True) -> np.ndarray:
    """Rates of change under the four interventions.

    u1 scales the force of infection by (1-u1); u2 replaces the baseline
    vaccination rate v; u3 replaces the hospitalization rate h_s; u4 adds
    to the burial rate mu_d.
    """
    if isinstance(u, ControlVector):
        if check_bounds:
            u.validate()
        u1, u2, u3, u4 = u.as_array()
    else:
        u1, u2, u3, u4 = (float(x) for x in u)
        if check_bounds:
            ControlVector(u1, u2, u3, u4).validate()
    y = _as_array(state)
    S, V, E, Is, Ia, H, D, R = y
    lam = (1.0 - u1) * force_of_infection(y, params)
    return np.array([
        params.Lambda - lam * S + params.omega * V - (u2 + params.mu) * S,
        u2 * S - (1.0 - params.epsilon) * lam * V - params.q1 * V,
        lam * (S + (1.0 - params.epsilon) * V) - params.q2 * E,
        params.p * params.sigma * E - (params.gamma_s + params.delta_s + u3 + params.mu) * Is,
        (1.0 - params.p) * params.sigma * E - params.q4 * Ia,
        u3 * Is - params.q5 * H,
        params.delta_s * Is + params.delta_h * H - (u4 + params.mu_d) * D,
        params.gamma_s * Is + params.gamma_a * Ia + params.gamma_h * H - params.mu * R,
    ])


def baseline_controls(params: ModelParams) -> ControlVector:
    """The control vector that reproduces the uncontrolled system exactly."""
    return ControlVector(0.0, params.v, params.h_s, 0.0,
                         bounds=(0.8, max(0.15, params.v), max(0.8, params.h_s), 0.5))


def adjoint_rates(lam: np.ndarray, y: np.ndarray, u: np.ndarray,
                  params: ModelParams, burden: np.ndarray) -> np.ndarray:
    """Caputo rates of the eight costates, i.e. -dH/dx of the control Hamiltonian.

    ``lam`` holds (lam_S, lam_V, lam_E, lam_Is, lam_Ia, lam_H, lam_D, lam_R),
    ``burden`` the four linear cost weights on (Is, Ia, H, D).  The force of
    infection couples the costates through the scalar
    P = lam_S*S + (1-eps)*lam_V*V - lam_E*(S + (1-eps)*V); every x-derivative
    of the Hamiltonian routes through d(lambda)/dx times P plus the direct
    compartment terms.
    """
    u1, u2, u3, u4 = u
    S, V, E, Is, Ia, H, D, R = y
    lS, lV, lE, lIs, lIa, lH, lD, lR = lam
    A1, A2, A3, A4 = burden
    one_eps = 1.0 - params.epsilon
    N = S + V + E + Is + Ia + H + R
    gamma = Is + params.eta_a * Ia + params.eta_d * D
    bgn2 = params.beta * gamma / (N * N)
    P = lS * S + one_eps * lV * V - lE * (S + one_eps * V)
    k = 1.0 - u1
    return np.array([
        (params.mu + u2) * lS - u2 * lV
        + k * bgn2 * ((lS - lE) * (N - S) - one_eps * (lV - lE) * V),
        -params.omega * lS + (params.mu + params.omega) * lV
        + k * bgn2 * (one_eps * (lV - lE) * (N - V) - (lS - lE) * S),
        (params.sigma + params.mu) * lE
        - params.p * params.sigma * lIs - (1.0 - params.p) * params.sigma * lIa
        - k * bgn2 * P,
        -A1 + (params.gamma_s + params.delta_s + u3 + params.mu) * lIs
        - u3 * lH - params.delta_s * lD - params.gamma_s * lR
        + k * (params.beta / N) * (1.0 - gamma / N) * P,
        -A2 + params.q4 * lIa - params.gamma_a * lR
        + k * (params.beta / N) * (params.eta_a - gamma / N) * P,
        -A3 + params.q5 * lH - params.delta_h * lD - params.gamma_h * lR
        - k * bgn2 * P,
        -A4 + (u4 + params.mu_d) * lD + k * (params.beta * params.eta_d / N) * P,
        params.mu * lR - k * bgn2 * P,
    ])
