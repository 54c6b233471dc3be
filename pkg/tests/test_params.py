"""Container-level behavior: validation, packing, composite rates."""
import dataclasses

import numpy as np
import pytest

from ebofrac.params import (
    CONTROL_BOUNDS,
    NEGATIVITY_TOLERANCE,
    STATE_INDEX,
    STATE_NAMES,
    ControlVector,
    ModelParams,
    State8,
    clip_state,
)


def test_state_names_layout():
    assert STATE_NAMES == ("S", "V", "E", "Is", "Ia", "H", "D", "R")
    assert STATE_INDEX["S"] == 0 and STATE_INDEX["R"] == 7


def test_default_params_construct():
    p = ModelParams()
    assert p.beta == 0.287
    assert p.alpha == 0.85
    assert p.mu == 3.5e-5


def test_composite_rates_are_sums():
    p = ModelParams()
    assert p.q0 == p.v + p.mu
    assert p.q1 == p.mu + p.omega
    assert p.q2 == p.mu + p.sigma
    assert p.q3 == p.gamma_s + p.delta_s + p.h_s + p.mu
    assert p.q4 == p.gamma_a + p.mu
    assert p.q5 == p.gamma_h + p.delta_h + p.mu
    assert p.q6 == p.mu_d


def test_as_array_matches_field_order():
    p = ModelParams()
    arr = p.as_array()
    names = ModelParams.field_names()
    assert arr.shape == (18,)
    assert names[0] == "beta" and names[-1] == "alpha"
    for i, name in enumerate(names):
        assert arr[i] == getattr(p, name)


def test_params_dict_round_trip():
    p = ModelParams(beta=0.31, v=0.02)
    doc = p.to_dict()
    q = ModelParams.from_dict(doc)
    assert q == p


def test_params_from_dict_rejects_unknown_key():
    with pytest.raises(ValueError, match="unknown parameter keys: bogus"):
        ModelParams.from_dict({"bogus": 1.0})


@pytest.mark.parametrize(
    "changes",
    [
        {"beta": -0.1},
        {"sigma": float("nan")},
        {"Lambda": float("inf")},
        {"p": 1.2},
        {"epsilon": -0.01},
        {"alpha": 0.0},
        {"alpha": 1.1},
        {"mu": 0.0},
        {"mu_d": -0.5},
    ],
)
def test_params_validation_rejects(changes):
    with pytest.raises(ValueError):
        ModelParams(**changes)


def test_params_replace_is_non_destructive():
    p = ModelParams()
    q = p.replace(beta=0.4)
    assert q.beta == 0.4
    assert p.beta == 0.287
    assert q.sigma == p.sigma


def test_control_vector_validate_and_pack():
    u = ControlVector(0.5, 0.1, 0.3, 0.2)
    u.validate()
    assert np.array_equal(u.as_array(), [0.5, 0.1, 0.3, 0.2])
    again = ControlVector.from_array(u.as_array())
    assert again == u


@pytest.mark.parametrize("bad", [
    ControlVector(u1=0.81),
    ControlVector(u2=0.151),
    ControlVector(u3=-0.01),
    ControlVector(u4=0.51),
])
def test_control_vector_rejects_out_of_bounds(bad):
    with pytest.raises(ValueError, match="outside"):
        bad.validate()


def test_control_bounds_values():
    assert CONTROL_BOUNDS == (0.8, 0.15, 0.8, 0.5)


def test_state_living_excludes_deceased():
    y = State8(100.0, 10.0, 5.0, 4.0, 3.0, 2.0, 50.0, 1.0)
    assert y.living() == 100.0 + 10.0 + 5.0 + 4.0 + 3.0 + 2.0 + 1.0


def test_state_clips_solver_underflow():
    y = State8(1.0, 0.0, -1e-12, 0.0, 0.0, 0.0, 0.0, 0.0)
    assert y.E == 0.0


def test_state_rejects_genuine_negative():
    with pytest.raises(ValueError, match="negative beyond solver tolerance"):
        State8(1.0, 0.0, -1e-6, 0.0, 0.0, 0.0, 0.0, 0.0)


def test_state_dict_round_trip_and_defaults():
    y = State8(1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0)
    assert State8.from_dict(y.to_dict()) == y
    partial = State8.from_dict({"S": 9.0})
    assert partial.S == 9.0 and partial.R == 0.0
    with pytest.raises(ValueError, match="unknown state keys"):
        State8.from_dict({"S": 1.0, "X": 2.0})


def test_clip_state_array():
    y = np.array([1.0, -1e-10, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0])
    out = clip_state(y)
    assert out[1] == 0.0 and out[0] == 1.0
    bad = y.copy()
    bad[3] = -2.0 * NEGATIVITY_TOLERANCE
    with pytest.raises(ValueError, match="negative beyond tolerance"):
        clip_state(bad)


def test_params_frozen():
    p = ModelParams()
    with pytest.raises(dataclasses.FrozenInstanceError):
        p.beta = 0.5
