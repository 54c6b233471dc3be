"""Quadrature correctness: weights, special cases, and the decay check."""
import numpy as np
import pytest
import torch

from dinn_estimator import caputo_l1, l1_decay_solution, ml_series, scheme_error
from dinn_estimator.l1 import l1_weights

# frozen with mpmath (40 digits): E_alpha(z) power series
ML_REFERENCE = [
    (0.85, -1.0, 0.38123100301346264722),
    (0.5, -1.0, 0.42758357615580700441),
    (0.85, -0.5, 0.6028845034702684786),
    (1.0, -1.0, 0.3678794411714423216),
    (0.6, -2.0, 0.23557103111182496885),
]


@pytest.mark.parametrize("alpha,z,expected", ML_REFERENCE)
def test_mittag_leffler_series_matches_reference(alpha, z, expected):
    assert ml_series(alpha, z) == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize("alpha", [0.3, 0.6, 0.85, 1.0])
def test_weights_start_at_one_and_decrease(alpha):
    w = l1_weights(alpha, 50)
    assert float(w[0]) == 1.0
    assert torch.all(w >= 0.0)
    assert torch.all(w[:-1] >= w[1:])
    if alpha < 1.0:
        assert torch.all(w > 0.0)
    else:
        # plain backward differences: only the newest difference counts
        assert torch.all(w[1:] == 0.0)


def test_order_one_reduces_to_backward_differences():
    rng = np.random.default_rng(3)
    values = torch.as_tensor(rng.normal(size=(40, 3)))
    h = 0.25
    got = caputo_l1(values, 1.0, h)
    expected = (values[1:] - values[:-1]) / h
    assert torch.allclose(got[1:], expected, atol=1e-12)
    assert torch.all(got[0] == 0.0)


def test_constant_has_zero_derivative():
    values = torch.full((30, 2), 7.5, dtype=torch.float64)
    got = caputo_l1(values, 0.6, 0.1)
    assert torch.all(got.abs() < 1e-12)


def test_derivative_is_linear_in_the_samples():
    rng = np.random.default_rng(11)
    a = torch.as_tensor(rng.normal(size=(25, 2)))
    b = torch.as_tensor(rng.normal(size=(25, 2)))
    combo = caputo_l1(2.0 * a - 3.0 * b, 0.7, 0.2)
    parts = 2.0 * caputo_l1(a, 0.7, 0.2) - 3.0 * caputo_l1(b, 0.7, 0.2)
    assert torch.allclose(combo, parts, atol=1e-11)


def test_order_is_differentiable():
    alpha = torch.tensor(0.8, dtype=torch.float64, requires_grad=True)
    values = torch.linspace(0.0, 1.0, 20, dtype=torch.float64)[:, None] ** 2
    out = caputo_l1(values, alpha, 0.05).sum()
    out.backward()
    assert np.isfinite(float(alpha.grad))


@pytest.mark.parametrize("bad", [0.0, -0.3, 1.2])
def test_invalid_order_rejected(bad):
    values = torch.zeros((5, 1), dtype=torch.float64)
    with pytest.raises(ValueError):
        caputo_l1(values, bad, 0.1)


def test_invalid_grid_rejected():
    with pytest.raises(ValueError):
        caputo_l1(torch.zeros((1, 2), dtype=torch.float64), 0.8, 0.1)
    with pytest.raises(ValueError):
        caputo_l1(torch.zeros((5, 2), dtype=torch.float64), 0.8, -0.1)


def test_decay_solution_tracks_mittag_leffler():
    t, y = l1_decay_solution(0.85, t_end=1.0, n=1000)
    exact = np.array([ml_series(0.85, -(tt ** 0.85)) for tt in t])
    assert y[0] == 1.0
    assert np.max(np.abs(y - exact)) < 1e-3


def test_scheme_error_below_training_gate():
    assert scheme_error() < 1e-3
