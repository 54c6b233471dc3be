"""Equilibrium and threshold analysis.

Closed-form and spectral reproduction numbers, disease-free and endemic
equilibria, finite-difference Jacobians with the fractional stability
criterion, normalized sensitivity indices of R0, and a Mittag-Leffler
evaluator for linear-decay references.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
from scipy.optimize import brentq

from .model import rhs_uncontrolled
from .params import ModelParams, State8

SENSITIVITY_PARAMS = ("beta", "sigma", "eta_d", "eta_a", "gamma_s", "delta_s",
                      "omega", "delta_h", "epsilon", "p", "v", "h_s",
                      "gamma_a", "mu", "mu_d", "Lambda")

# |index| thresholds for the qualitative magnitude labels
_MAGNITUDE_BANDS = ((0.75, "very high"), (0.4, "high"), (0.2, "moderate"),
                    (0.09, "low"), (0.0, "very low"))


class RootFindingError(RuntimeError):
    """Raised when the endemic force-of-infection equation cannot be solved."""


@dataclass(frozen=True)
class NGMatrices:
    """New-infection matrix F, transition matrix V, and susceptibility factor."""

    F: np.ndarray
    V: np.ndarray
    psi: float

    def __post_init__(self) -> None:
        if self.F.shape != (5, 5) or self.V.shape != (5, 5):
            raise ValueError("F and V must be 5x5")


@dataclass(frozen=True)
class EquilibriumPoint:
    """A steady state of the uncontrolled system.

    ``kind`` is 'disease-free' or 'endemic'; ``lambda_star`` is the force of
    infection there (zero at the disease-free point).
    """

    kind: str
    state: State8
    lambda_star: float

    def residual(self, params: ModelParams) -> float:
        return float(np.max(np.abs(rhs_uncontrolled(0.0, self.state, params))))


@dataclass(frozen=True)
class StabilityResult:
    verdict: str
    eigenvalues: np.ndarray
    threshold: float
    margin: float


@dataclass(frozen=True)
class SensitivityReport:
    """Normalized indices (p/R0)*dR0/dp keyed by parameter name."""

    r0: float
    indices: Dict[str, float]

    def sign(self, name: str) -> int:
        value = self.indices[name]
        if abs(value) < 1e-8:
            return 0
        return 1 if value > 0.0 else -1

    def magnitude_class(self, name: str) -> str:
        size = abs(self.indices[name])
        for cutoff, label in _MAGNITUDE_BANDS:
            if size >= cutoff:
                return label
        return _MAGNITUDE_BANDS[-1][1]

    def to_dict(self) -> dict:
        return {
            "R0": self.r0,
            "indices": {
                name: {"index": value, "sign": self.sign(name),
                       "magnitude": self.magnitude_class(name)}
                for name, value in self.indices.items()
            },
        }

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("parameter,index\n")
            for name, value in self.indices.items():
                fh.write(f"{name},{value:.17g}\n")


def _residual_tolerance(params: ModelParams) -> float:
    return 1e-8 * max(1.0, params.Lambda / params.mu)


def disease_free_equilibrium(params: ModelParams) -> EquilibriumPoint:
    """Steady state with every infected compartment empty."""
    denom = params.mu * (params.q1 + params.v)
    s_star = params.Lambda * params.q1 / denom
    v_star = params.Lambda * params.v / denom
    point = EquilibriumPoint("disease-free",
                             State8(s_star, v_star, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
                             0.0)
    if point.residual(params) >= _residual_tolerance(params):
        raise RootFindingError("disease-free equilibrium residual out of tolerance")
    return point


def susceptibility_factor(params: ModelParams) -> float:
    """(S* + (1-eps)V*)/(Lambda/mu) at the disease-free point."""
    return (params.q1 + (1.0 - params.epsilon) * params.v) / (params.q1 + params.v)


def ngm_matrices(params: ModelParams) -> NGMatrices:
    """Linearization blocks at the disease-free point.

    Infected coordinates are ordered (E, Is, Ia, H, D); F holds the new
    infections (a single nonzero E row), V the remaining transitions.
    """
    psi = susceptibility_factor(params)
    F = np.zeros((5, 5))
    F[0, 1] = params.beta * psi
    F[0, 2] = params.beta * params.eta_a * psi
    F[0, 4] = params.beta * params.eta_d * psi
    p, sigma = params.p, params.sigma
    V = np.array([
        [params.q2, 0.0, 0.0, 0.0, 0.0],
        [-p * sigma, params.q3, 0.0, 0.0, 0.0],
        [-(1.0 - p) * sigma, 0.0, params.q4, 0.0, 0.0],
        [0.0, -params.h_s, 0.0, params.q5, 0.0],
        [0.0, -params.delta_s, 0.0, -params.delta_h, params.q6],
    ])
    return NGMatrices(F, V, psi)


def r0_closed_form(params: ModelParams) -> float:
    """Reproduction number from the explicit next-generation expression."""
    psi = susceptibility_factor(params)
    q2, q3, q4, q5, q6 = params.q2, params.q3, params.q4, params.q5, params.q6
    symptomatic = (params.p * params.sigma / q2) * (
        1.0 / q3
        + params.eta_d * (params.delta_s * q5 + params.delta_h * params.h_s) / (q3 * q5 * q6))
    asymptomatic = params.eta_a * (1.0 - params.p) * params.sigma / (q2 * q4)
    return params.beta * psi * (symptomatic + asymptomatic)


def r0_spectral(params: ModelParams) -> float:
    """Reproduction number as the spectral radius of F V^-1."""
    ngm = ngm_matrices(params)
    next_gen = ngm.F @ np.linalg.solve(ngm.V, np.eye(5))
    return float(np.max(np.abs(np.linalg.eigvals(next_gen))))


def _endemic_coefficient(params: ModelParams) -> float:
    """Aggregate infectiousness-per-exposure constant in the endemic equation."""
    q3, q4, q5, q6 = params.q3, params.q4, params.q5, params.q6
    return params.beta * params.sigma * (
        params.p / q3
        + params.eta_a * (1.0 - params.p) / q4
        + params.eta_d * params.p * (params.delta_s + params.delta_h * params.h_s / q5) / (q3 * q6))


def _endemic_state(params: ModelParams, lam: float) -> State8:
    """Compartment values implied by an endemic force of infection."""
    one_eps = 1.0 - params.epsilon
    delta = (params.q1 + one_eps * lam) * (params.q0 + lam) - params.omega * params.v
    s_star = params.Lambda * (params.q1 + one_eps * lam) / delta
    v_star = params.Lambda * params.v / delta
    e_star = lam * (s_star + one_eps * v_star) / params.q2
    is_star = params.p * params.sigma * e_star / params.q3
    ia_star = (1.0 - params.p) * params.sigma * e_star / params.q4
    h_star = params.h_s * is_star / params.q5
    d_star = (params.delta_s * is_star + params.delta_h * h_star) / params.q6
    r_star = (params.gamma_s * is_star + params.gamma_a * ia_star
              + params.gamma_h * h_star) / params.mu
    return State8(s_star, v_star, e_star, is_star, ia_star, h_star, d_star, r_star)


def endemic_gap(params: ModelParams, lam: float) -> float:
    """Scalar equation whose positive root is the endemic force of infection.

    Vanishes when lam reproduces itself through the infection cycle; at
    lam = 0 it equals R0 - 1.  The normalizing population is the living
    population of the implied state, so roots correspond to exact steady
    states rather than the Lambda/mu approximation.
    """
    state = _endemic_state(params, lam)
    n_living = (params.Lambda - params.delta_s * state.Is
                - params.delta_h * state.H) / params.mu
    coupled = state.S + (1.0 - params.epsilon) * state.V
    return _endemic_coefficient(params) * coupled / (params.q2 * n_living) - 1.0


def endemic_equilibrium(params: ModelParams) -> Optional[EquilibriumPoint]:
    """Positive steady state, or None when R0 <= 1.

    Brackets the root of :func:`endemic_gap` starting from [0, q2] with
    tenfold expansion, then polishes with Brent's method to |gap| < 1e-12.
    """
    if r0_closed_form(params) <= 1.0:
        return None
    upper = params.q2
    cap = 1e6 * params.q2
    while endemic_gap(params, upper) > 0.0:
        upper *= 10.0
        if upper > cap:
            raise RootFindingError(
                f"no sign change in [0, {cap}] (R0={r0_closed_form(params):.6g})")
    lam_star = brentq(lambda lam: endemic_gap(params, lam), 0.0, upper,
                      xtol=1e-18, rtol=8.9e-16, maxiter=200)
    if abs(endemic_gap(params, lam_star)) >= 1e-12:
        raise RootFindingError(f"root polish failed at lambda*={lam_star:.6g}")
    point = EquilibriumPoint("endemic", _endemic_state(params, lam_star), lam_star)
    if point.residual(params) >= _residual_tolerance(params):
        raise RootFindingError("endemic equilibrium residual out of tolerance")
    return point


def jacobian(params: ModelParams, state, step_scale: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of the uncontrolled vector field."""
    x = state.as_array() if isinstance(state, State8) else np.asarray(state, dtype=np.float64)
    J = np.empty((8, 8))
    for i in range(8):
        h = step_scale * max(abs(x[i]), 1.0)
        plus = x.copy()
        minus = x.copy()
        plus[i] += h
        minus[i] -= h
        J[:, i] = (rhs_uncontrolled(0.0, plus, params)
                   - rhs_uncontrolled(0.0, minus, params)) / (2.0 * h)
    return J


def stability_check(point: EquilibriumPoint, params: ModelParams) -> StabilityResult:
    """Fractional eigenvalue test: stable iff every |arg(eig)| > alpha*pi/2."""
    eigenvalues = np.linalg.eigvals(jacobian(params, point.state))
    threshold = params.alpha * math.pi / 2.0
    margin = float(np.min(np.abs(np.angle(eigenvalues)))) - threshold
    if margin > 1e-9:
        verdict = "stable"
    elif margin < -1e-9:
        verdict = "unstable"
    else:
        verdict = "marginal"
    return StabilityResult(verdict, eigenvalues, threshold, margin)


def sensitivity_indices(params: ModelParams) -> SensitivityReport:
    """Normalized R0 sensitivities by central differences on the closed form."""
    r0 = r0_closed_form(params)
    if r0 <= 0.0:
        raise ValueError("sensitivity indices need R0 > 0")
    indices: Dict[str, float] = {}
    for name in SENSITIVITY_PARAMS:
        x = getattr(params, name)
        if x == 0.0:
            # the x/R0 prefactor kills the index at the domain boundary,
            # and perturbing below zero would leave the admissible region
            indices[name] = 0.0
            continue
        h = 1e-6 * abs(x)
        upper = r0_closed_form(params.replace(**{name: x + h}))
        lower = r0_closed_form(params.replace(**{name: x - h}))
        indices[name] = (x / r0) * (upper - lower) / (2.0 * h)
    return SensitivityReport(r0, indices)


def _ml_algebraic_tail(alpha: float, beta: float, z: float) -> float:
    """Optimally truncated tail -sum_{k>=1} z^-k / Gamma(beta - alpha k).

    The expansion is asymptotic, not convergent: terms shrink, bottom out
    near k = |z|^(1/alpha)/alpha, then grow again.  Summation stops at the
    smallest term, which bounds the error by that term's size.  Arguments
    hitting a gamma pole contribute nothing and are skipped.
    """
    total = 0.0
    prev = math.inf
    for k in range(1, 200):
        arg = beta - alpha * k
        if arg <= 0.0 and abs(arg - round(arg)) < 1e-12:
            continue
        term = z ** (-k) / math.gamma(arg)
        if abs(term) >= prev:
            break
        total -= term
        prev = abs(term)
    return total


def mittag_leffler(alpha: float, beta: float = 1.0, z: float = 0.0) -> float:
    """Two-parameter Mittag-Leffler function E_{alpha,beta}(z) for real z.

    Direct series for moderate arguments, asymptotic expansions beyond.
    The series loses roughly one digit of accuracy per unit of
    |z|^(1/alpha), so the cross-over sits at |z| = 20^alpha rather than at
    a fixed radius; worst-case relative error near the seam is about 1e-5
    and far better elsewhere.
    """
    if alpha <= 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if z == 0.0:
        return 1.0 / math.gamma(beta)
    if alpha == 1.0 and beta == 1.0:
        return math.exp(z)
    # alpha > 1 keeps the series everywhere: terms decay combinatorially
    # fast and the one-sided expansions below would be wrong there
    if alpha > 1.0 or abs(z) <= 20.0 ** alpha:
        total = 0.0
        log_abs_z = math.log(abs(z))
        sign_z = 1.0 if z > 0.0 else -1.0
        sign_k = 1.0
        try:
            for k in range(100_000):
                term = sign_k * math.exp(k * log_abs_z - math.lgamma(alpha * k + beta))
                total += term
                if abs(term) < 1e-16 * abs(total) and k > 0:
                    return total
                sign_k *= sign_z
        except OverflowError:
            raise RuntimeError(
                f"Mittag-Leffler series overflows for alpha={alpha}, z={z}")
        raise RuntimeError("Mittag-Leffler series did not converge")
    if z < 0.0:
        return _ml_algebraic_tail(alpha, beta, z)
    # exponential branch for large positive arguments, with the algebraic
    # correction included
    root = z ** (1.0 / alpha)
    try:
        lead = (1.0 / alpha) * root ** (1.0 - beta) * math.exp(root)
    except OverflowError:
        return math.inf
    return lead + _ml_algebraic_tail(alpha, beta, z)
