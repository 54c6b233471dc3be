"""Time-stepping engines.

Two engines are exposed: an adaptive Runge-Kutta-Fehlberg 4(5) solver for
integer-order runs, and a fractional Adams-Bashforth-Moulton predictor-
corrector for Caputo order alpha < 1.  Both operate on arbitrary vector
fields; the model-specific fast paths live in :mod:`ebofrac.kernels`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import gamma as gamma_fn
from typing import Callable, Optional

import numpy as np

# Fehlberg tableau: stage nodes, stage coefficients, 4th and 5th order weights
RKF_C = np.array([0.0, 1.0 / 4.0, 3.0 / 8.0, 12.0 / 13.0, 1.0, 1.0 / 2.0])
RKF_A = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 4.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 32.0, 9.0 / 32.0, 0.0, 0.0, 0.0],
    [1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0, 0.0, 0.0],
    [439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0, 0.0],
    [-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0],
])
RKF_B4 = np.array([25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -1.0 / 5.0, 0.0])
RKF_B5 = np.array([16.0 / 135.0, 0.0, 6656.0 / 12825.0, 28561.0 / 56430.0, -9.0 / 50.0, 2.0 / 55.0])


@dataclass(frozen=True)
class IntegratorConfig:
    """Step-size control constants for the adaptive solver."""

    rel_tol: float = 1e-6
    abs_tol: float = 1e-8
    h_min: float = 1e-8
    h_max: float = 0.1
    h_init: float = 0.01
    safety: float = 0.9
    error_exponent: float = 0.2
    max_steps: int = 1_000_000

    def __post_init__(self) -> None:
        if not 0.0 < self.h_min <= self.h_init <= self.h_max:
            raise ValueError("need 0 < h_min <= h_init <= h_max")
        if self.rel_tol <= 0.0 or self.abs_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")


@dataclass(frozen=True)
class Trajectory:
    """Time-indexed solution with integration metadata.

    ``derivs`` holds the vector field at each stored node and enables cubic
    Hermite interpolation between nodes (fourth-order accurate dense output).
    """

    times: np.ndarray
    states: np.ndarray
    derivs: Optional[np.ndarray] = None
    accepted: int = 0
    rejected: int = 0
    integrator: str = ""

    def __post_init__(self) -> None:
        if len(self.times) != len(self.states):
            raise ValueError("times and states must have equal length")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0.0):
            raise ValueError("times must be strictly increasing")

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def interpolate(self, t) -> np.ndarray:
        """Evaluate the dense output at scalar or array times."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
        out = hermite_eval(self.times, self.states, self.derivs, t_arr)
        return out[0] if np.isscalar(t) or np.ndim(t) == 0 else out

    def to_csv(self, path, column_names=None) -> None:
        """Write `t,<columns>` rows with 17 significant digits."""
        if column_names is None:
            if self.states.shape[1] != 8:
                raise ValueError("column_names required for non-model trajectories")
            column_names = ("S", "V", "E", "Is", "Ia", "H", "D", "R")
        with open(path, "w", newline="") as fh:
            fh.write("t," + ",".join(column_names) + "\n")
            for t, row in zip(self.times, self.states):
                cells = ",".join(format(x, ".17g") for x in row)
                fh.write(f"{t:.17g},{cells}\n")


class IntegrationError(RuntimeError):
    """Raised when a solve cannot reach the end time; carries partial output."""

    def __init__(self, message: str, partial: Optional[Trajectory] = None):
        super().__init__(message)
        self.partial = partial


def hermite_eval(times: np.ndarray, states: np.ndarray,
                 derivs: Optional[np.ndarray], t_query: np.ndarray) -> np.ndarray:
    """Piecewise cubic Hermite dense output; linear if derivatives are absent."""
    times = np.asarray(times)
    t_query = np.clip(t_query, times[0], times[-1])
    idx = np.clip(np.searchsorted(times, t_query, side="right") - 1, 0, len(times) - 2)
    h = times[idx + 1] - times[idx]
    s = (t_query - times[idx]) / h
    if derivs is None:
        return states[idx] + (states[idx + 1] - states[idx]) * s[:, None]
    s = s[:, None]
    h = h[:, None]
    h00 = (1.0 + 2.0 * s) * (1.0 - s) ** 2
    h10 = s * (1.0 - s) ** 2
    h01 = s * s * (3.0 - 2.0 * s)
    h11 = s * s * (s - 1.0)
    return (h00 * states[idx] + h10 * h * derivs[idx]
            + h01 * states[idx + 1] + h11 * h * derivs[idx + 1])


def _step_rkf45(rhs: Callable, t: float, y: np.ndarray, h: float, k1: np.ndarray):
    """One Fehlberg step; returns the 5th- and 4th-order solutions."""
    k = np.empty((6,) + y.shape)
    k[0] = k1
    for i in range(1, 6):
        k[i] = rhs(t + RKF_C[i] * h, y + h * (RKF_A[i, :i] @ k[:i]))
    y5 = y + h * (RKF_B5 @ k)
    y4 = y + h * (RKF_B4 @ k)
    return y5, y4


def rkf45_solve(rhs: Callable, y0, t0: float, T: float,
                cfg: Optional[IntegratorConfig] = None,
                clip_negative: bool = False) -> Trajectory:
    """Adaptive RKF45 integration of y' = rhs(t, y) over [t0, T].

    A step is accepted when the 4th/5th-order discrepancy delta satisfies
    delta <= rel_tol*||y5|| + abs_tol; the solution advances with the
    5th-order value and the step size follows the standard 0.9*(tol/delta)^0.2
    update clamped to [h_min, h_max].
    """
    if T <= t0:
        raise ValueError("need T > t0")
    cfg = cfg or IntegratorConfig()
    y = np.atleast_1d(np.asarray(y0, dtype=np.float64)).copy()
    t = t0
    f = np.asarray(rhs(t, y), dtype=np.float64)
    times = [t]
    states = [y.copy()]
    derivs = [f.copy()]
    accepted = rejected = 0
    h = cfg.h_init
    end_gap = 1e-14 * max(1.0, abs(T))

    def fail(reason: str) -> IntegrationError:
        partial = Trajectory(np.array(times), np.array(states), np.array(derivs),
                             accepted, rejected, "rkf45")
        return IntegrationError(reason, partial)

    while t < T - end_gap:
        if accepted + rejected >= cfg.max_steps:
            raise fail(f"max_steps={cfg.max_steps} exceeded at t={t}")
        h_step = min(h, T - t)
        y5, y4 = _step_rkf45(rhs, t, y, h_step, f)
        delta = float(np.sqrt(np.sum((y5 - y4) ** 2)))
        tol = cfg.rel_tol * float(np.sqrt(np.sum(y5 ** 2))) + cfg.abs_tol
        if delta > 0.0:
            h_opt = cfg.safety * h_step * (tol / delta) ** cfg.error_exponent
        else:
            h_opt = cfg.h_max
        if delta <= tol:
            t = t + h_step
            y = y5
            if clip_negative:
                low = y.min()
                if low < -1e-9:
                    raise fail(f"state went negative ({low}) at t={t}")
                y = np.where(y < 0.0, 0.0, y)
            f = np.asarray(rhs(t, y), dtype=np.float64)
            times.append(t)
            states.append(y.copy())
            derivs.append(f.copy())
            accepted += 1
            h = min(cfg.h_max, max(cfg.h_min, h_opt))
        else:
            rejected += 1
            if h_step <= cfg.h_min * (1.0 + 1e-12):
                raise fail(f"step underflow at t={t}: h_min step still fails tolerance")
            h = max(cfg.h_min, h_opt)

    return Trajectory(np.array(times), np.array(states), np.array(derivs),
                      accepted, rejected, "rkf45")


def abm_weights(alpha: float, n_steps: int):
    """Predictor and corrector convolution weights for the fractional scheme.

    Indexing is by lag k = n - j.  Predictor weights come from the
    product-rectangle rule, corrector interior weights from the
    product-trapezoid rule; the j = 0 corrector weight depends on the step
    index and is computed separately.
    """
    k = np.arange(n_steps + 1, dtype=np.float64)
    predictor = (k + 1.0) ** alpha - k ** alpha
    corrector = ((k + 2.0) ** (alpha + 1.0) + k ** (alpha + 1.0)
                 - 2.0 * (k + 1.0) ** (alpha + 1.0))
    return predictor, corrector


def abm_fractional_solve(rhs: Callable, y0, t0: float, T: float, alpha: float,
                         n_steps: int, clip_negative: bool = False) -> Trajectory:
    """Fractional Adams-Bashforth-Moulton predictor-corrector on a uniform grid.

    Solves the Caputo problem D^alpha y = rhs(t, y), y(t0) = y0, with full
    memory: every step convolves the entire history with the kernel weights,
    so the cost grows quadratically with n_steps.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if n_steps < 2:
        raise ValueError("n_steps must be at least 2")
    if T <= t0:
        raise ValueError("need T > t0")
    y0 = np.atleast_1d(np.asarray(y0, dtype=np.float64))
    h = (T - t0) / n_steps
    times = t0 + h * np.arange(n_steps + 1)
    states = np.empty((n_steps + 1,) + y0.shape)
    rates = np.empty_like(states)
    states[0] = y0
    rates[0] = rhs(times[0], y0)

    pred_w, corr_w = abm_weights(alpha, n_steps)
    pre_pred = h ** alpha / gamma_fn(alpha + 1.0)
    pre_corr = h ** alpha / gamma_fn(alpha + 2.0)
    n_idx = np.arange(n_steps, dtype=np.float64)
    head_w = n_idx ** (alpha + 1.0) - (n_idx - alpha) * (n_idx + 1.0) ** alpha

    for n in range(n_steps):
        y_pred = y0 + pre_pred * (pred_w[n::-1] @ rates[:n + 1])
        f_pred = rhs(times[n + 1], y_pred)
        history = corr_w[n - 1::-1] @ rates[1:n + 1] if n >= 1 else 0.0
        y_new = y0 + pre_corr * (head_w[n] * rates[0] + history + f_pred)
        if clip_negative:
            low = y_new.min()
            if low < -1e-9:
                raise IntegrationError(
                    f"state went negative ({low}) at t={times[n + 1]}",
                    Trajectory(times[:n + 1], states[:n + 1].copy(),
                               rates[:n + 1].copy(), n, 0, "abm"))
            y_new = np.where(y_new < 0.0, 0.0, y_new)
        states[n + 1] = y_new
        rates[n + 1] = rhs(times[n + 1], y_new)

    return Trajectory(times, states, rates, n_steps, 0, "abm")
