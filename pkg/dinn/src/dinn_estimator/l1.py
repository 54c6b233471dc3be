"""L1 quadrature for Caputo derivatives on uniform grids.

The scheme convolves first differences of the samples with the kernel
weights w_k = (k+1)^(1-alpha) - k^(1-alpha).  Its self-check solves the
scalar decay equation D^alpha y = -y implicitly and compares against the
Mittag-Leffler series, which is the closed-form solution; training
refuses to start when that check fails.
"""
import math

import numpy as np
import torch


def _as_order(alpha) -> torch.Tensor:
    if not torch.is_tensor(alpha):
        alpha = torch.tensor(float(alpha), dtype=torch.float64)
    value = float(alpha.detach())
    if not 0.0 < value <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {value}")
    return alpha


def l1_weights(alpha, n: int) -> torch.Tensor:
    """First ``n`` kernel weights, differentiable in the order."""
    alpha = _as_order(alpha)
    k = torch.arange(n, dtype=torch.float64)
    w = (k + 1.0) ** (1.0 - alpha) - k ** (1.0 - alpha)
    if n == 0:
        return w
    # 0**0 evaluates to 1, which would zero the leading weight at alpha=1;
    # the true leading weight is identically 1 for every order
    return torch.cat([torch.ones_like(w[:1]), w[1:]])


_TOEPLITZ_CACHE: dict = {}


def _toeplitz_indices(n: int):
    """Lower-triangular gather indices and mask, cached per grid size."""
    cached = _TOEPLITZ_CACHE.get(n)
    if cached is None:
        idx = torch.arange(n)
        gap = idx[:, None] - idx[None, :]
        cached = (gap.clamp(min=0), (gap >= 0).to(torch.float64))
        _TOEPLITZ_CACHE[n] = cached
    return cached


def caputo_l1(values: torch.Tensor, alpha, h: float) -> torch.Tensor:
    """Caputo derivative of sampled curves on a uniform grid of step h.

    ``values`` has shape (n, m): n grid points, m curves.  The result has
    the same shape with a zero first row; the quadrature needs at least
    one backward difference.  At alpha=1 the scheme collapses to plain
    backward differences.
    """
    if values.ndim != 2 or values.shape[0] < 2:
        raise ValueError("values must be (n, m) with n >= 2")
    if h <= 0.0:
        raise ValueError("h must be positive")
    alpha = _as_order(alpha)
    n = values.shape[0]
    w = l1_weights(alpha, n - 1)
    diffs = values[1:] - values[:-1]
    gather, mask = _toeplitz_indices(n - 1)
    kernel = w[gather] * mask
    scale = torch.as_tensor(h, dtype=torch.float64) ** (-alpha)
    scale = scale / torch.exp(torch.lgamma(2.0 - alpha))
    out = scale * (kernel @ diffs)
    return torch.cat([torch.zeros_like(values[:1]), out])


def ml_series(alpha: float, z: float, terms: int = 80) -> float:
    """Mittag-Leffler E_alpha(z) by its power series.

    Accurate in double precision for moderate |z| (a few units); that
    covers the decay-solution arguments used by the scheme check.
    """
    return sum(z ** k / math.gamma(alpha * k + 1.0) for k in range(terms))


def l1_decay_solution(alpha: float, t_end: float = 1.0, n: int = 1000):
    """Solve D^alpha y = -y, y(0)=1 with the implicit L1 scheme."""
    if n < 2:
        raise ValueError("need at least two grid points")
    _as_order(alpha)
    t = np.linspace(0.0, t_end, n)
    h = t[1] - t[0]
    k = np.arange(n, dtype=np.float64)
    w = (k + 1.0) ** (1.0 - alpha) - k ** (1.0 - alpha)
    w[0] = 1.0
    c = h ** -alpha / math.gamma(2.0 - alpha)
    y = np.empty(n)
    y[0] = 1.0
    diffs = np.empty(n - 1)
    for j in range(1, n):
        history = np.dot(w[1:j][::-1], diffs[:j - 1]) if j > 1 else 0.0
        y[j] = c * (y[j - 1] - history) / (c + 1.0)
        diffs[j - 1] = y[j] - y[j - 1]
    return t, y


def scheme_error(alpha: float = 0.85, t_end: float = 1.0, n: int = 1000) -> float:
    """Max gap between the L1 decay solution and the Mittag-Leffler series."""
    t, y = l1_decay_solution(alpha, t_end, n)
    exact = np.array([ml_series(alpha, -(tt ** alpha)) for tt in t])
    return float(np.max(np.abs(y - exact)))
