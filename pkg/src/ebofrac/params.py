"""Parameter and state containers for the eight-compartment Ebola model.

Compartment order used throughout the package:

    0  S    susceptible
    1  V    vaccinated
    2  E    exposed
    3  Is   symptomatic infectious
    4  Ia   asymptomatic infectious
    5  H    hospitalized
    6  D    deceased, unburied
    7  R    recovered
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

STATE_NAMES = ("S", "V", "E", "Is", "Ia", "H", "D", "R")
STATE_INDEX = {name: i for i, name in enumerate(STATE_NAMES)}

#: negative values of smaller magnitude than this are solver underflow and get
#: clipped to zero; anything more negative is treated as an error
NEGATIVITY_TOLERANCE = 1e-9

#: default box constraints for the four controls
CONTROL_BOUNDS = (0.8, 0.15, 0.8, 0.5)


@dataclass(frozen=True)
class ModelParams:
    """Epidemiological rates and fractions, plus the fractional order alpha.

    Defaults are the nominal working point: literature values where they
    exist, midpoints of the published ranges for the vaccination block
    (v, epsilon, omega), and documented choices for the two rates the
    source tables leave unspecified (gamma_h, mu_d).
    """

    beta: float = 0.287        # transmission rate (1/day)
    eta_a: float = 0.523       # asymptomatic relative infectiousness
    eta_d: float = 0.734       # deceased relative infectiousness
    sigma: float = 0.094       # incubation rate (1/day)
    p: float = 0.712           # symptomatic proportion
    gamma_s: float = 0.068     # symptomatic recovery rate (1/day)
    gamma_a: float = 0.089     # asymptomatic recovery rate (1/day)
    gamma_h: float = 0.10      # hospitalized recovery rate (1/day)
    delta_s: float = 0.103     # symptomatic disease death rate (1/day)
    delta_h: float = 0.067     # hospitalized disease death rate (1/day)
    h_s: float = 0.312         # hospitalization rate (1/day)
    Lambda: float = 100.0      # recruitment (individuals/day)
    mu: float = 3.5e-5         # natural mortality rate (1/day)
    mu_d: float = 0.08         # burial rate (1/day)
    v: float = 0.04            # vaccination rate (1/day)
    epsilon: float = 0.90      # vaccine efficacy
    omega: float = 0.003       # waning rate (1/day)
    alpha: float = 0.85        # fractional order

    def __post_init__(self) -> None:
        for name in ("beta", "eta_a", "eta_d", "sigma", "gamma_s", "gamma_a",
                     "gamma_h", "delta_s", "delta_h", "h_s", "Lambda", "v",
                     "omega"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0.0):
                raise ValueError(f"{name} must be finite and >= 0, got {value}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not self.mu > 0.0:
            raise ValueError(f"mu must be > 0, got {self.mu}")
        if not self.mu_d > 0.0:
            raise ValueError(f"mu_d must be > 0, got {self.mu_d}")

    # composite loss rates
    @property
    def q0(self) -> float:
        return self.v + self.mu

    @property
    def q1(self) -> float:
        return self.mu + self.omega

    @property
    def q2(self) -> float:
        return self.mu + self.sigma

    @property
    def q3(self) -> float:
        return self.gamma_s + self.delta_s + self.h_s + self.mu

    @property
    def q4(self) -> float:
        return self.gamma_a + self.mu

    @property
    def q5(self) -> float:
        return self.gamma_h + self.delta_h + self.mu

    @property
    def q6(self) -> float:
        return self.mu_d

    def as_array(self) -> np.ndarray:
        """Pack the parameters into the flat float64 layout the kernels use."""
        return np.array([getattr(self, f.name) for f in dataclasses.fields(self)],
                        dtype=np.float64)

    def replace(self, **changes: float) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {f.name: float(getattr(self, f.name)) for f in dataclasses.fields(self)}

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelParams":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ValueError(f"unknown parameter keys: {', '.join(unknown)}")
        return cls(**{k: float(v) for k, v in doc.items()})

    @classmethod
    def field_names(cls) -> tuple:
        return tuple(f.name for f in dataclasses.fields(cls))


@dataclass(frozen=True)
class ControlVector:
    """One point of the four intervention intensities.

    u1 personal protection, u2 vaccination, u3 treatment/hospitalization,
    u4 safe burial.  Each is clamped-checked against its upper bound.
    """

    u1: float = 0.0
    u2: float = 0.0
    u3: float = 0.0
    u4: float = 0.0
    bounds: tuple = CONTROL_BOUNDS

    def validate(self) -> None:
        for i, (value, top) in enumerate(zip(self.as_array(), self.bounds), start=1):
            if not 0.0 <= value <= top:
                raise ValueError(f"u{i}={value} outside [0, {top}]")

    def as_array(self) -> np.ndarray:
        return np.array([self.u1, self.u2, self.u3, self.u4], dtype=np.float64)

    @classmethod
    def from_array(cls, u: np.ndarray, bounds: tuple = CONTROL_BOUNDS) -> "ControlVector":
        return cls(float(u[0]), float(u[1]), float(u[2]), float(u[3]), bounds)


@dataclass(frozen=True)
class State8:
    """One point of the eight-compartment state, individuals per compartment."""

    S: float
    V: float
    E: float
    Is: float
    Ia: float
    H: float
    D: float
    R: float

    def __post_init__(self) -> None:
        for name in STATE_NAMES:
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
            if value < -NEGATIVITY_TOLERANCE:
                raise ValueError(f"{name}={value} is negative beyond solver tolerance")
            if value < 0.0:
                object.__setattr__(self, name, 0.0)

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in STATE_NAMES], dtype=np.float64)

    @classmethod
    def from_array(cls, y: np.ndarray) -> "State8":
        return cls(*(float(x) for x in y))

    def living(self) -> float:
        """Living population N_L; the deceased compartment is excluded."""
        return self.S + self.V + self.E + self.Is + self.Ia + self.H + self.R

    def to_dict(self) -> dict:
        return {n: float(getattr(self, n)) for n in STATE_NAMES}

    @classmethod
    def from_dict(cls, doc: dict) -> "State8":
        unknown = sorted(set(doc) - set(STATE_NAMES))
        if unknown:
            raise ValueError(f"unknown state keys: {', '.join(unknown)}")
        return cls(**{n: float(doc.get(n, 0.0)) for n in STATE_NAMES})


def clip_state(y: np.ndarray) -> np.ndarray:
    """Zero out solver underflow; reject genuinely negative components."""
    worst = y.min()
    if worst < -NEGATIVITY_TOLERANCE:
        raise ValueError(f"state component {worst} negative beyond tolerance")
    return np.where(y < 0.0, 0.0, y)
