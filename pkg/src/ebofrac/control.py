"""Four-control intervention problem: objective, adjoints, projection, sweep.

The controls act as (u1) transmission reduction, (u2) vaccination, (u3)
hospitalization and (u4) safe burial.  The sweep alternates forward state
solves, backward costate solves on the reversed clock, and relaxed
projected-control updates until the schedule stops moving.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from . import kernels
from .integrators import (IntegrationError, IntegratorConfig, Trajectory,
                          abm_fractional_solve, hermite_eval)
from .model import adjoint_rates
from .params import CONTROL_BOUNDS, ControlVector, ModelParams, State8
from .simulate import default_abm_steps, resolve_integrator, simulate_model

MORTALITY_GRID = 2001


@dataclass(frozen=True)
class CostWeights:
    """Linear burden weights A on (Is, Ia, H, D) and quadratic costs B on u."""

    A1: float = 1.0
    A2: float = 1.0
    A3: float = 1.0
    A4: float = 1.0
    B1: float = 10.0
    B2: float = 50.0
    B3: float = 25.0
    B4: float = 40.0

    def __post_init__(self) -> None:
        for name in ("A1", "A2", "A3", "A4", "B1", "B2", "B3", "B4"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")

    def burden_array(self) -> np.ndarray:
        return np.array([self.A1, self.A2, self.A3, self.A4])

    def quad_array(self) -> np.ndarray:
        return np.array([self.B1, self.B2, self.B3, self.B4])


@dataclass(frozen=True)
class ControlSchedule:
    """Piecewise-linear control values on a uniform time grid."""

    times: np.ndarray
    values: np.ndarray
    bounds: Tuple[float, float, float, float] = CONTROL_BOUNDS

    def __post_init__(self) -> None:
        if self.values.ndim != 2 or self.values.shape != (len(self.times), 4):
            raise ValueError("values must have shape (len(times), 4)")
        if len(self.times) < 2:
            raise ValueError("schedule needs at least two nodes")
        steps = np.diff(self.times)
        if not np.all(steps > 0.0) or not np.allclose(steps, steps[0], rtol=1e-9):
            raise ValueError("times must be a uniform ascending grid")
        upper = np.asarray(self.bounds)
        if np.any(self.values < -1e-12) or np.any(self.values > upper + 1e-12):
            raise ValueError("control values violate their bounds")

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def at(self, t: float) -> np.ndarray:
        return np.array([np.interp(t, self.times, self.values[:, j]) for j in range(4)])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("t,u1,u2,u3,u4\n")
            for t, row in zip(self.times, self.values):
                cells = ",".join(format(x, ".17g") for x in row)
                fh.write(f"{t:.17g},{cells}\n")

    @classmethod
    def zeros(cls, t0: float, T: float, n_nodes: int,
              bounds: Tuple[float, float, float, float] = CONTROL_BOUNDS) -> "ControlSchedule":
        return cls(np.linspace(t0, T, n_nodes), np.zeros((n_nodes, 4)), bounds)


@dataclass(frozen=True)
class AdjointTrajectory:
    """Costates on the schedule grid; the terminal node is exactly zero."""

    times: np.ndarray
    costates: np.ndarray

    def __post_init__(self) -> None:
        if self.costates.shape != (len(self.times), 8):
            raise ValueError("costates must have shape (len(times), 8)")
        if np.any(self.costates[-1] != 0.0):
            raise ValueError("terminal costate must vanish (transversality)")

    def to_csv(self, path) -> None:
        names = ("lam_S", "lam_V", "lam_E", "lam_Is", "lam_Ia", "lam_H", "lam_D", "lam_R")
        with open(path, "w", newline="") as fh:
            fh.write("t," + ",".join(names) + "\n")
            for t, row in zip(self.times, self.costates):
                cells = ",".join(format(x, ".17g") for x in row)
                fh.write(f"{t:.17g},{cells}\n")


@dataclass(frozen=True)
class SweepResult:
    converged: bool
    iterations: int
    objective_history: np.ndarray
    delta_history: np.ndarray
    controls: ControlSchedule
    trajectory: Trajectory
    adjoints: AdjointTrajectory
    summary: Dict[str, float]


def objective(traj: Trajectory, sched: ControlSchedule, w: CostWeights) -> float:
    """Integrated burden-plus-effort cost over the schedule horizon."""
    gap = 1e-9 * max(1.0, abs(sched.t_end))
    if abs(traj.t0 - sched.t0) > gap or abs(traj.t_end - sched.t_end) > gap:
        raise ValueError("grid mismatch: schedule and trajectory cover different spans")
    states = traj.interpolate(sched.times)
    burden = states[:, 3:7] @ w.burden_array()
    effort = 0.5 * (sched.values ** 2) @ w.quad_array()
    return float(np.trapezoid(burden + effort, sched.times))


def adjoint_rhs(t: float, adjoint, state, u, params: ModelParams,
                w: CostWeights) -> np.ndarray:
    """Caputo rates of the costates, -dH/dx of the control Hamiltonian."""
    lam = np.asarray(adjoint, dtype=np.float64)
    y = state.as_array() if isinstance(state, State8) else np.asarray(state, dtype=np.float64)
    uu = u.as_array() if isinstance(u, ControlVector) else np.asarray(u, dtype=np.float64)
    return adjoint_rates(lam, y, uu, params, w.burden_array())


def project_controls(state, adjoint, params: ModelParams, w: CostWeights,
                     bounds: Tuple[float, float, float, float] = CONTROL_BOUNDS
                     ) -> ControlVector:
    """Closed-form Hamiltonian minimizers clamped to the admissible box."""
    y = state.as_array() if isinstance(state, State8) else np.asarray(state, dtype=np.float64)
    lam = np.asarray(adjoint, dtype=np.float64)
    S, V, _, Is, _, _, D, _ = y
    N = y[0] + y[1] + y[2] + y[3] + y[4] + y[5] + y[7]
    gamma = y[3] + params.eta_a * y[4] + params.eta_d * y[6]
    P = (lam[0] * S + (1.0 - params.epsilon) * lam[1] * V
         - lam[2] * (S + (1.0 - params.epsilon) * V))
    raw = (
        -params.beta * gamma * P / (w.B1 * N),
        (lam[0] - lam[1]) * S / w.B2,
        (lam[3] - lam[5]) * Is / w.B3,
        lam[6] * D / w.B4,
    )
    clamped = tuple(min(bounds[j], max(0.0, raw[j])) for j in range(4))
    return ControlVector(*clamped, bounds=bounds)


def _mortality(traj: Trajectory, params: ModelParams, u4: np.ndarray,
               times: np.ndarray) -> float:
    """Terminal deceased pool plus the buried outflow integral."""
    d_values = traj.interpolate(times)[:, 6]
    outflow = (u4 + params.mu_d) * d_values
    return float(d_values[-1] + np.trapezoid(outflow, times))


def _summarize(traj: Trajectory, params: ModelParams, sched: ControlSchedule,
               total_cost: float) -> Dict[str, float]:
    infected = traj.states[:, 2:6].sum(axis=1)
    times = np.linspace(traj.t0, traj.t_end, MORTALITY_GRID)
    u4 = np.interp(times, sched.times, sched.values[:, 3])
    return {
        "peak_infected": float(infected.max()),
        "final_deceased": float(traj.final_state[6]),
        "cumulative_mortality": _mortality(traj, params, u4, times),
        "total_cost": total_cost,
    }


def _solve_adjoint_rkf45(params: ModelParams, w: CostWeights, fwd: Trajectory,
                         sched: ControlSchedule, cfg: IntegratorConfig) -> Trajectory:
    result = kernels.rkf45_adjoint(
        params.as_array(), w.burden_array(), fwd.times, fwd.states, fwd.derivs,
        sched.times, sched.values, sched.t_end, cfg.rel_tol, cfg.abs_tol,
        cfg.h_min, cfg.h_max, cfg.h_init, cfg.safety, cfg.error_exponent,
        cfg.max_steps)
    tau_times, lams, gders, accepted, rejected, status = result
    traj = Trajectory(tau_times, lams, gders, accepted, rejected, "rkf45")
    if status != 0:
        raise IntegrationError(f"adjoint solve failed (status {status})", traj)
    return traj


def _solve_adjoint_abm(params: ModelParams, w: CostWeights, fwd: Trajectory,
                       sched: ControlSchedule) -> Trajectory:
    """Fractional backward solve on the reversed clock, sharing the forward grid."""
    T = sched.t_end
    n = len(sched.times) - 1
    h = (T - sched.t0) / n
    burden = w.burden_array()

    def rhs(tau: float, lam: np.ndarray) -> np.ndarray:
        idx = min(n, max(0, int(round((T - tau) / h))))
        return -adjoint_rates(lam, fwd.states[idx], sched.values[idx], params, burden)

    return abm_fractional_solve(rhs, np.zeros(8), 0.0, T, params.alpha, n)


def _costates_on_grid(tau_traj: Trajectory, grid: np.ndarray, exact: bool) -> np.ndarray:
    if exact:
        return tau_traj.states[::-1].copy()
    tau_query = grid[-1] - grid
    return hermite_eval(tau_traj.times, tau_traj.states, tau_traj.derivs, tau_query)


def forward_backward_sweep(params: ModelParams, w: CostWeights, y0, T: float,
                           cfg: Optional[IntegratorConfig] = None,
                           relaxation: float = 0.5, tol: float = 1e-3,
                           max_iter: int = 100, n_nodes: int = 1001,
                           integrator: str = "auto",
                           bounds: Tuple[float, float, float, float] = CONTROL_BOUNDS
                           ) -> SweepResult:
    """Iterate state/costate solves with relaxed projected-control updates.

    Starts from the zero schedule, relaxes each update as
    u <- (1-relaxation)*u + relaxation*u_new, and stops when the sup-norm
    change of the schedule, relative to its size, drops below ``tol``.
    """
    if not 0.0 < relaxation <= 1.0:
        raise ValueError("relaxation must lie in (0, 1]")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    engine = resolve_integrator(integrator, params.alpha)
    cfg = cfg or IntegratorConfig()
    if engine == "abm":
        n_steps = default_abm_steps(0.0, T) if n_nodes is None else n_nodes - 1
        grid = np.linspace(0.0, T, n_steps + 1)
    else:
        n_steps = None
        grid = np.linspace(0.0, T, n_nodes)
    u = np.zeros((len(grid), 4))

    objective_history = []
    delta_history = []
    converged = False
    iterations = 0
    fwd = None
    tau_traj = None

    for _ in range(max_iter):
        iterations += 1
        sched = ControlSchedule(grid, u, bounds)
        fwd = simulate_model(params, y0, T, integrator=engine, config=cfg,
                             n_steps=n_steps, controls=(grid, u))
        objective_history.append(objective(fwd, sched, w))
        if engine == "abm":
            tau_traj = _solve_adjoint_abm(params, w, fwd, sched)
            lam_grid = _costates_on_grid(tau_traj, grid, exact=True)
            states_grid = fwd.states
        else:
            tau_traj = _solve_adjoint_rkf45(params, w, fwd, sched, cfg)
            lam_grid = _costates_on_grid(tau_traj, grid, exact=False)
            states_grid = fwd.interpolate(grid)

        u_new = np.empty_like(u)
        for i in range(len(grid)):
            u_new[i] = project_controls(states_grid[i], lam_grid[i], params, w,
                                        bounds).as_array()
        delta_u = float(np.max(np.abs(u_new - u)) / max(np.max(np.abs(u_new)), 1e-6))
        delta_history.append(delta_u)
        u = (1.0 - relaxation) * u + relaxation * u_new
        if delta_u < tol:
            converged = True
            break

    sched = ControlSchedule(grid, u, bounds)
    final = simulate_model(params, y0, T, integrator=engine, config=cfg,
                           n_steps=n_steps, controls=(grid, u))
    total_cost = objective(final, sched, w)
    adjoints = AdjointTrajectory(grid, _costates_on_grid(
        tau_traj, grid, exact=(engine == "abm")))
    return SweepResult(
        converged=converged,
        iterations=iterations,
        objective_history=np.array(objective_history),
        delta_history=np.array(delta_history),
        controls=sched,
        trajectory=final,
        adjoints=adjoints,
        summary=_summarize(final, params, sched, total_cost),
    )


def run_strategy(params: ModelParams, fixed_u: ControlVector, y0, T: float,
                 cfg: Optional[IntegratorConfig] = None,
                 integrator: str = "auto", n_steps: Optional[int] = None,
                 baseline_mortality: Optional[float] = None
                 ) -> Tuple[Trajectory, Dict[str, float]]:
    """Integrate with constant controls and summarize the epidemic burden.

    The mortality reduction is measured against the do-nothing baseline
    (all four controls zero); pass ``baseline_mortality`` to reuse a
    previously computed baseline value.
    """
    fixed_u.validate()
    traj = simulate_model(params, y0, T, integrator=integrator, config=cfg,
                          n_steps=n_steps, controls=fixed_u)
    times = np.linspace(traj.t0, traj.t_end, MORTALITY_GRID)
    u4 = np.full(MORTALITY_GRID, fixed_u.u4)
    mortality = _mortality(traj, params, u4, times)
    if baseline_mortality is None:
        zero = ControlVector(0.0, 0.0, 0.0, 0.0, bounds=fixed_u.bounds)
        if fixed_u.as_array().any():
            base_traj = simulate_model(params, y0, T, integrator=integrator,
                                       config=cfg, n_steps=n_steps,
                                       controls=zero)
            baseline_mortality = _mortality(
                base_traj, params, np.zeros(MORTALITY_GRID), times)
        else:
            baseline_mortality = mortality
    reduction = 100.0 * (1.0 - mortality / baseline_mortality) if baseline_mortality else 0.0
    infected = traj.states[:, 2:6].sum(axis=1)
    summary = {
        "peak_infected": float(infected.max()),
        "final_deceased": float(traj.final_state[6]),
        "cumulative_mortality": mortality,
        "baseline_mortality": baseline_mortality,
        "mortality_reduction_pct": reduction,
    }
    return traj, summary


def default_strategies(bounds: Tuple[float, float, float, float] = CONTROL_BOUNDS
                       ) -> Dict[str, ControlVector]:
    """Named constant-control scenarios at the admissible maxima."""
    u1, u2, u3, u4 = bounds

    def vec(a: float, b: float, c: float, d: float) -> ControlVector:
        return ControlVector(a, b, c, d, bounds=bounds)

    return {
        "baseline": vec(0.0, 0.0, 0.0, 0.0),
        "u1": vec(u1, 0.0, 0.0, 0.0),
        "u2": vec(0.0, u2, 0.0, 0.0),
        "u3": vec(0.0, 0.0, u3, 0.0),
        "u4": vec(0.0, 0.0, 0.0, u4),
        "u3+u4": vec(0.0, 0.0, u3, u4),
        "all": vec(u1, u2, u3, u4),
    }
