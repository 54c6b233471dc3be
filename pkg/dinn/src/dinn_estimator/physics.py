"""Compartment rate equations and the physics residual.

The eight-compartment structure (S, V, E, Is, Ia, H, D, R) and its rates
mirror the simulator that produced the training data; the deceased stay
infectious through the eta_d*D term but are excluded from the living
population that normalizes the force of infection.
"""
from typing import Mapping

import torch

from .l1 import caputo_l1

STATE_NAMES = ("S", "V", "E", "Is", "Ia", "H", "D", "R")
PARAM_NAMES = (
    "beta", "eta_a", "eta_d", "sigma", "p", "gamma_s", "gamma_a", "gamma_h",
    "delta_s", "delta_h", "h_s", "Lambda", "mu", "mu_d", "v", "epsilon",
    "omega", "alpha",
)


def compartment_rates(y: torch.Tensor, par: Mapping) -> torch.Tensor:
    """Uncontrolled rates for stacked states ``y`` of shape (n, 8)."""
    S, V, E, Is, Ia, H, D, R = (y[:, j] for j in range(8))
    living = S + V + E + Is + Ia + H + R
    force = par["beta"] * (Is + par["eta_a"] * Ia + par["eta_d"] * D) / living
    leak = 1.0 - par["epsilon"]
    return torch.stack([
        par["Lambda"] + par["omega"] * V - force * S - (par["v"] + par["mu"]) * S,
        par["v"] * S - leak * force * V - (par["mu"] + par["omega"]) * V,
        force * (S + leak * V) - (par["mu"] + par["sigma"]) * E,
        par["p"] * par["sigma"] * E
        - (par["gamma_s"] + par["delta_s"] + par["h_s"] + par["mu"]) * Is,
        (1.0 - par["p"]) * par["sigma"] * E - (par["gamma_a"] + par["mu"]) * Ia,
        par["h_s"] * Is - (par["gamma_h"] + par["delta_h"] + par["mu"]) * H,
        par["delta_s"] * Is + par["delta_h"] * H - par["mu_d"] * D,
        par["gamma_s"] * Is + par["gamma_a"] * Ia + par["gamma_h"] * H
        - par["mu"] * R,
    ], dim=1)


def caputo_residual(values: torch.Tensor, par: Mapping, h: float) -> torch.Tensor:
    """Fractional derivative of the sampled curves minus the model rates.

    ``values`` is an (n, 8) grid of states in original units on a uniform
    grid of step ``h``; ``par`` supplies all parameter values including
    the order ``alpha``.  The first row is zero by convention, matching
    the quadrature.
    """
    derivative = caputo_l1(values, par["alpha"], h)
    residual = derivative - compartment_rates(values, par)
    return torch.cat([torch.zeros_like(residual[:1]), residual[1:]])
