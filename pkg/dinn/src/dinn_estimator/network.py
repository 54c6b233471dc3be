"""Time-to-compartments network."""
from typing import Sequence

import torch
from torch import nn


class CompartmentNet(nn.Module):
    """Fully connected map from scalar time to the eight compartments.

    Hyperbolic-tangent hidden layers with Xavier-initialized weights; the
    output layer is linear because the targets are min-max normalized.
    Double precision throughout so the fractional-derivative quadrature
    is not the accuracy bottleneck.
    """

    def __init__(self, hidden: Sequence[int] = (64, 64, 64)) -> None:
        super().__init__()
        if not hidden or any(int(width) < 1 for width in hidden):
            raise ValueError("hidden layer widths must be positive")
        layers = []
        fan_in = 1
        for width in hidden:
            layers.append(nn.Linear(fan_in, int(width)))
            layers.append(nn.Tanh())
            fan_in = int(width)
        layers.append(nn.Linear(fan_in, 8))
        self.stack = nn.Sequential(*layers)
        self.double()
        for module in self.stack:
            if isinstance(module, nn.Linear):
                nn.init.xavier_uniform_(module.weight)
                nn.init.zeros_(module.bias)

    def forward(self, t: torch.Tensor) -> torch.Tensor:
        if t.ndim == 1:
            t = t[:, None]
        return self.stack(t)
