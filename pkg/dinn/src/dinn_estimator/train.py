"""Joint training of the network and the epidemiological parameters.

The composite loss is L_data + lambda_balance * L_physics: mean squared
error on the observed (normalized) states plus the mean squared Caputo
residual on a uniform collocation grid.  The learnable parameter vector
chi is optimized jointly with the network weights through sigmoid box
transforms, so every iterate respects the declared bounds.
"""
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import torch

from .data import Dataset, Normalization, split_indices
from .l1 import caputo_l1, scheme_error
from .network import CompartmentNet
from .physics import PARAM_NAMES, caputo_residual, compartment_rates

CHI_CORE = ("beta", "sigma", "gamma_s", "eta_a", "eta_d", "epsilon", "v", "alpha")
CHI_EXTENDED = tuple(name for name in PARAM_NAMES if name != "mu")

DEFAULT_BOUNDS: Dict[str, Tuple[float, float]] = {
    "beta": (0.1, 0.5),
    "eta_a": (0.1, 1.0),
    "eta_d": (0.1, 1.0),
    "sigma": (0.02, 0.3),
    "p": (0.3, 0.95),
    "gamma_s": (0.02, 0.3),
    "gamma_a": (0.02, 0.3),
    "gamma_h": (0.02, 0.3),
    "delta_s": (0.01, 0.3),
    "delta_h": (0.01, 0.3),
    "h_s": (0.05, 0.6),
    "Lambda": (10.0, 1000.0),
    "mu_d": (0.01, 0.3),
    "v": (0.0, 0.15),
    "epsilon": (0.5, 0.99),
    "omega": (0.0, 0.01),
    "alpha": (0.5, 1.0),
}

SCHEME_TOLERANCE = 1e-3


class TrainingDivergence(RuntimeError):
    """Raised when the composite loss blows past the divergence limit."""

    def __init__(self, message: str, history: np.ndarray) -> None:
        super().__init__(message)
        self.history = history


@dataclass(frozen=True)
class DinnConfig:
    """Training settings.

    ``collocation`` of None evaluates the physics residual on the
    dataset's own grid, where the network is anchored by the data loss;
    an explicit count uses a fresh uniform grid of that size instead.
    """

    hidden: Tuple[int, ...] = (48, 48)
    collocation: Optional[int] = None
    lambda_balance: float = 10.0
    parameter_set: str = "core"
    bounds: Optional[Dict[str, Tuple[float, float]]] = None
    lr: float = 3e-3
    chi_lr: float = 2e-2
    epochs: int = 2000
    lbfgs_iters: int = 6000
    burn_in: int = 5
    restarts: int = 3
    seed: int = 0
    divergence_limit: float = 1e6

    def __post_init__(self) -> None:
        if self.lambda_balance <= 0.0:
            raise ValueError("lambda_balance must be positive")
        if self.parameter_set not in ("core", "extended"):
            raise ValueError("parameter_set must be 'core' or 'extended'")
        if self.collocation is not None and self.collocation < 50:
            raise ValueError("collocation must be at least 50")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.lbfgs_iters < 0 or self.burn_in < 0:
            raise ValueError("lbfgs_iters and burn_in must be non-negative")
        if self.lr <= 0.0 or self.chi_lr <= 0.0:
            raise ValueError("learning rates must be positive")
        for name, (lo, hi) in self.chi_bounds().items():
            if not np.isfinite([lo, hi]).all() or lo >= hi:
                raise ValueError(f"bounds for {name} must satisfy lo < hi")
            if name == "alpha" and not (0.0 < lo and hi <= 1.0):
                raise ValueError("alpha bounds must stay inside (0, 1]")
            if name in ("p", "epsilon") and not (0.0 <= lo and hi <= 1.0):
                raise ValueError(f"{name} bounds must stay inside [0, 1]")
            if name not in ("alpha",) and lo < 0.0:
                raise ValueError(f"{name} bounds must be non-negative")

    def chi_names(self) -> Tuple[str, ...]:
        return CHI_CORE if self.parameter_set == "core" else CHI_EXTENDED

    def chi_bounds(self) -> Dict[str, Tuple[float, float]]:
        merged = dict(DEFAULT_BOUNDS)
        if self.bounds:
            unknown = set(self.bounds) - set(PARAM_NAMES)
            if unknown:
                raise ValueError(f"bounds for unknown parameters: {sorted(unknown)}")
            merged.update(self.bounds)
        return {name: merged[name] for name in self.chi_names()}


@dataclass
class TrainResult:
    network: CompartmentNet
    chi: Dict[str, float]
    loss_history: np.ndarray
    data_history: np.ndarray
    physics_history: np.ndarray
    normalization: Normalization
    train_indices: np.ndarray
    val_indices: np.ndarray
    test_indices: np.ndarray
    init_seed: int
    config: DinnConfig = field(repr=False)

    def predict(self, times: np.ndarray) -> np.ndarray:
        """Network states at the given times, in original units."""
        t = torch.as_tensor(self.normalization.norm_t(np.asarray(times, dtype=np.float64)))
        with torch.no_grad():
            out = self.network(t[:, None]).numpy()
        return self.normalization.denorm_y(out)


def _selection_score(dataset: Dataset, cfg: DinnConfig, chi: Dict[str, float]) -> float:
    """Mean squared Caputo residual of the raw samples under ``chi``.

    Network-free: it measures how well a candidate parameter vector
    alone explains the recorded trajectory, so it ranks restarts by the
    quantity we actually care about instead of by how well each network
    interpolates.  The first fifth of the rows (or the training burn-in,
    whichever is larger) is masked because the startup quadrature error
    would otherwise swamp the differences between candidates.
    """
    par = {name: float(value) for name, value in dataset.params.items()}
    par.update(chi)
    values = torch.as_tensor(dataset.values)
    lo = dataset.values.min(axis=0)
    span = dataset.values.max(axis=0) - lo
    span = torch.as_tensor(np.where(span > 0.0, span, 1.0))
    skip = max(cfg.burn_in, len(dataset.times) // 5)
    if skip + 1 >= len(dataset.times):
        skip = cfg.burn_in
    residual = caputo_residual(values, par, dataset.step)[1 + skip:] / span
    return float(torch.mean(residual ** 2))


def train(dataset: Dataset, config: Optional[DinnConfig] = None) -> TrainResult:
    """Fit the network and recover chi from one exported dataset.

    Runs ``config.restarts`` independent fits that share the data split
    and differ only in network initialization, then keeps the one whose
    recovered parameters best explain the raw samples (lowest
    network-free residual score).  The loss surface is non-convex in
    the joint (weights, chi) space, and an unlucky initialization can
    settle on a shallow plateau; restarts plus a parameter-centric
    selection make the returned estimate the best minimum found rather
    than the first.
    """
    cfg = config or DinnConfig()
    if not dataset.is_uniform():
        raise ValueError("training needs a uniform sample grid")
    gate = scheme_error()
    if gate >= SCHEME_TOLERANCE:
        raise RuntimeError(
            f"Caputo quadrature self-check failed: decay-solution error "
            f"{gate:.3e} >= {SCHEME_TOLERANCE}")

    best: Optional[TrainResult] = None
    best_score = np.inf
    failure: Optional[TrainingDivergence] = None
    for offset in range(cfg.restarts):
        try:
            candidate = _train_single(dataset, cfg, cfg.seed + offset)
        except TrainingDivergence as exc:
            failure = exc
            continue
        score = _selection_score(dataset, cfg, candidate.chi)
        if best is None or score < best_score:
            best, best_score = candidate, score
    if best is None:
        raise failure
    return best


def _train_single(dataset: Dataset, cfg: DinnConfig, init_seed: int) -> TrainResult:
    torch.manual_seed(init_seed)
    # the split is drawn from cfg.seed, not the restart seed, so every
    # restart optimizes the same objective and final losses are comparable
    train_idx, val_idx, test_idx = split_indices(len(dataset.times), cfg.seed)
    norm = Normalization.fit(dataset.times, dataset.values)

    t_train = torch.as_tensor(norm.norm_t(dataset.times[train_idx]))[:, None]
    y_train = torch.as_tensor(norm.norm_y(dataset.values[train_idx]))
    if cfg.collocation is None:
        colloc = dataset.times
    else:
        colloc = np.linspace(dataset.t0, dataset.horizon, cfg.collocation)
    h = float(colloc[1] - colloc[0])
    t_colloc = torch.as_tensor(norm.norm_t(colloc))[:, None]
    lo = torch.as_tensor(norm.lo)
    span = torch.as_tensor(norm.span)

    names = cfg.chi_names()
    bounds = cfg.chi_bounds()
    box_lo = torch.tensor([bounds[n][0] for n in names], dtype=torch.float64)
    box_hi = torch.tensor([bounds[n][1] for n in names], dtype=torch.float64)
    # raw zeros put every estimate at its box center, away from the truth
    raw = torch.zeros(len(names), dtype=torch.float64, requires_grad=True)
    known = {name: float(value) for name, value in dataset.params.items()}
    net = CompartmentNet(cfg.hidden)

    def chi_params():
        values = box_lo + (box_hi - box_lo) * torch.sigmoid(raw)
        par = dict(known)
        for i, name in enumerate(names):
            par[name] = values[i]
        return par

    def losses():
        data_loss = torch.mean((net(t_train) - y_train) ** 2)
        par = chi_params()
        y_norm = net(t_colloc)
        derivative = caputo_l1(y_norm, par["alpha"], h)
        rates = compartment_rates(y_norm * span + lo, par) / span
        residual = (derivative - rates)[1 + cfg.burn_in:]
        return data_loss, torch.mean(residual ** 2)

    loss_hist, data_hist, phys_hist = [], [], []

    def record_and_check(total, data_part, phys_part):
        loss_hist.append(float(total.detach()))
        data_hist.append(float(data_part.detach()))
        phys_hist.append(float(phys_part.detach()))
        if not np.isfinite(loss_hist[-1]) or loss_hist[-1] > cfg.divergence_limit:
            raise TrainingDivergence(
                f"loss {loss_hist[-1]:.3e} exceeded {cfg.divergence_limit:.0e} "
                f"after {len(loss_hist)} evaluations "
                f"(data {data_hist[-1]:.3e}, physics {phys_hist[-1]:.3e})",
                np.array(loss_hist))

    optimizer = torch.optim.Adam([
        {"params": net.parameters(), "lr": cfg.lr},
        {"params": [raw], "lr": cfg.chi_lr},
    ])
    for _ in range(cfg.epochs):
        optimizer.zero_grad()
        data_part, phys_part = losses()
        total = data_part + cfg.lambda_balance * phys_part
        record_and_check(total, data_part, phys_part)
        total.backward()
        optimizer.step()

    # quasi-Newton polish in restarted cycles; a fresh curvature memory
    # per cycle digs through plateaus that stall a single long run
    remaining = cfg.lbfgs_iters
    while remaining > 0:
        cycle = min(1000, remaining)
        remaining -= cycle
        polisher = torch.optim.LBFGS(
            list(net.parameters()) + [raw], lr=1.0, max_iter=cycle,
            history_size=100, line_search_fn="strong_wolfe",
            tolerance_grad=1e-13, tolerance_change=1e-16)

        def closure():
            polisher.zero_grad()
            data_part, phys_part = losses()
            total = data_part + cfg.lambda_balance * phys_part
            record_and_check(total, data_part, phys_part)
            total.backward()
            return total

        polisher.step(closure)

    with torch.no_grad():
        final = chi_params()
    chi = {name: float(final[name]) for name in names}
    return TrainResult(
        network=net,
        chi=chi,
        loss_history=np.array(loss_hist),
        data_history=np.array(data_hist),
        physics_history=np.array(phys_hist),
        normalization=norm,
        train_indices=train_idx,
        val_indices=val_idx,
        test_indices=test_idx,
        init_seed=init_seed,
        config=cfg,
    )
