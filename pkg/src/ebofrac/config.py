"""Scenario configuration: strict JSON parsing with path-qualified errors.

Every key is checked; unknown keys are rejected rather than ignored so a
typo cannot silently fall back to a default.  Defaults are the nominal
parameter table plus a standard outbreak seeding.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Union

from .control import CostWeights
from .integrators import IntegratorConfig
from .params import STATE_NAMES, ControlVector, ModelParams, State8
from .simulate import INTEGRATOR_CHOICES

DEFAULT_INITIAL_STATE = {"S": 1_000_000.0, "V": 0.0, "E": 20.0, "Is": 10.0,
                         "Ia": 5.0, "H": 0.0, "D": 0.0, "R": 0.0}


class ConfigError(ValueError):
    """Invalid scenario configuration; message carries the offending path."""


@dataclass(frozen=True)
class FixedStrategy:
    u: ControlVector


@dataclass(frozen=True)
class SweepStrategy:
    relaxation: float = 0.5
    tol: float = 1e-3
    max_iter: int = 100
    n_nodes: int = 1001


Strategy = Union[FixedStrategy, SweepStrategy, None]


@dataclass(frozen=True)
class ScenarioConfig:
    params: ModelParams
    initial_state: State8
    t0: float
    horizon: float
    integrator: str
    integrator_config: IntegratorConfig
    abm_steps: Optional[int]
    strategy: Strategy
    cost_weights: CostWeights
    output_dir: str
    seed: int


def _expect_mapping(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected an object, got {type(value).__name__}")
    return dict(value)


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {type(value).__name__}")
    return float(value)


def _integer(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {type(value).__name__}")
    return value


def _reject_unknown(section: dict, path: str) -> None:
    if section:
        key = sorted(section)[0]
        raise ConfigError(f"{path}.{key}: unknown key")


def _numeric_section(raw, path: str, allowed, defaults: dict) -> dict:
    section = _expect_mapping(raw, path)
    values = dict(defaults)
    for key in list(section):
        if key not in allowed:
            raise ConfigError(f"{path}.{key}: unknown key")
        values[key] = _number(section.pop(key), f"{path}.{key}")
    return values


def _build_params(raw, path: str) -> ModelParams:
    values = _numeric_section(raw, path, set(ModelParams.field_names()), {})
    try:
        return ModelParams(**values)
    except ValueError as err:
        raise ConfigError(f"{path}: {err}") from None


def _build_state(raw, path: str) -> State8:
    values = _numeric_section(raw, path, set(STATE_NAMES), DEFAULT_INITIAL_STATE)
    try:
        return State8(**values)
    except ValueError as err:
        raise ConfigError(f"{path}: {err}") from None


def _build_integrator_config(raw, path: str) -> IntegratorConfig:
    fields = ("rel_tol", "abs_tol", "h_min", "h_max", "h_init", "safety",
              "error_exponent", "max_steps")
    section = _expect_mapping(raw, path)
    kwargs = {}
    for key in list(section):
        if key not in fields:
            raise ConfigError(f"{path}.{key}: unknown key")
        if key == "max_steps":
            kwargs[key] = _integer(section.pop(key), f"{path}.{key}")
        else:
            kwargs[key] = _number(section.pop(key), f"{path}.{key}")
    try:
        return IntegratorConfig(**kwargs)
    except ValueError as err:
        raise ConfigError(f"{path}: {err}") from None


def _build_weights(raw, path: str) -> CostWeights:
    names = ("A1", "A2", "A3", "A4", "B1", "B2", "B3", "B4")
    values = _numeric_section(raw, path, set(names), {})
    try:
        return CostWeights(**values)
    except ValueError as err:
        raise ConfigError(f"{path}: {err}") from None


def _build_strategy(raw, path: str) -> Strategy:
    if raw is None:
        return None
    section = _expect_mapping(raw, path)
    kind = section.pop("kind", None)
    if kind == "fixed":
        u_raw = section.pop("u", None)
        _reject_unknown(section, path)
        if (not isinstance(u_raw, list) or len(u_raw) != 4):
            raise ConfigError(f"{path}.u: expected a list of four numbers")
        u_vals = [_number(x, f"{path}.u[{i}]") for i, x in enumerate(u_raw)]
        try:
            u = ControlVector(*u_vals)
            u.validate()
            return FixedStrategy(u)
        except ValueError as err:
            raise ConfigError(f"{path}.u: {err}") from None
    if kind == "sweep":
        relaxation = _number(section.pop("relaxation", 0.5), f"{path}.relaxation")
        tol = _number(section.pop("tol", 1e-3), f"{path}.tol")
        max_iter = _integer(section.pop("max_iter", 100), f"{path}.max_iter")
        n_nodes = _integer(section.pop("n_nodes", 1001), f"{path}.n_nodes")
        _reject_unknown(section, path)
        if not 0.0 < relaxation <= 1.0:
            raise ConfigError(f"{path}.relaxation: must lie in (0, 1]")
        if tol <= 0.0:
            raise ConfigError(f"{path}.tol: must be positive")
        if max_iter < 1:
            raise ConfigError(f"{path}.max_iter: must be at least 1")
        if n_nodes < 2:
            raise ConfigError(f"{path}.n_nodes: must be at least 2")
        return SweepStrategy(relaxation, tol, max_iter, n_nodes)
    raise ConfigError(f"{path}.kind: expected 'fixed' or 'sweep', got {kind!r}")


def parse_config(document: dict) -> ScenarioConfig:
    """Validate a parsed JSON document into a ScenarioConfig."""
    top = _expect_mapping(document, "config")
    params = _build_params(top.pop("params", {}), "params")
    state = _build_state(top.pop("initial_state", {}), "initial_state")
    t0 = _number(top.pop("t0", 0.0), "t0")
    horizon = _number(top.pop("horizon", 100.0), "horizon")
    integrator = top.pop("integrator", "auto")
    icfg = _build_integrator_config(top.pop("integrator_config", {}), "integrator_config")
    abm_steps_raw = top.pop("abm_steps", None)
    strategy = _build_strategy(top.pop("strategy", None), "strategy")
    weights = _build_weights(top.pop("cost_weights", {}), "cost_weights")
    output_dir = top.pop("output_dir", "out")
    seed = _integer(top.pop("seed", 0), "seed")
    _reject_unknown(top, "config")

    if integrator not in INTEGRATOR_CHOICES:
        raise ConfigError(f"integrator: expected one of {INTEGRATOR_CHOICES}, got {integrator!r}")
    if horizon <= t0:
        raise ConfigError("horizon: must exceed t0")
    if not isinstance(output_dir, str):
        raise ConfigError("output_dir: expected a string")
    abm_steps = None
    if abm_steps_raw is not None:
        abm_steps = _integer(abm_steps_raw, "abm_steps")
        if abm_steps < 2:
            raise ConfigError("abm_steps: must be at least 2")
    if state.living() <= 0.0:
        raise ConfigError("initial_state: living population must be positive")
    return ScenarioConfig(params, state, t0, horizon, integrator, icfg,
                          abm_steps, strategy, weights, output_dir, seed)


def load_config(path) -> ScenarioConfig:
    """Read and validate a JSON scenario file."""
    try:
        with open(path) as fh:
            document = json.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(
            f"{path}: invalid JSON at line {err.lineno}, column {err.colno}: {err.msg}"
        ) from None
    return parse_config(document)
