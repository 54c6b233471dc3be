"""Loading and preparing exported trajectory datasets.

A dataset is the exporter's pair of files: a trajectory CSV with header
``t,S,V,E,Is,Ia,H,D,R`` and a JSON sidecar recording the generating
parameters, horizon, noise level and seed.
"""
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from .physics import PARAM_NAMES, STATE_NAMES

EXPECTED_HEADER = "t," + ",".join(STATE_NAMES)
SIDECAR_KEYS = ("params", "initial_state", "t0", "horizon", "n_points",
                "noise_level", "seed", "integrator")


@dataclass(frozen=True)
class Dataset:
    times: np.ndarray
    values: np.ndarray
    params: Dict[str, float]
    initial_state: Dict[str, float]
    t0: float
    horizon: float
    noise_level: float
    seed: int
    integrator: str

    def __post_init__(self) -> None:
        if self.values.shape != (len(self.times), 8):
            raise ValueError("values must have shape (len(times), 8)")
        if len(self.times) < 10:
            raise ValueError("dataset needs at least 10 samples")
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("times must be strictly increasing")

    @property
    def step(self) -> float:
        return float(self.times[1] - self.times[0])

    def is_uniform(self, rtol: float = 1e-9) -> bool:
        steps = np.diff(self.times)
        return bool(np.allclose(steps, steps[0], rtol=rtol))


def load_dataset(csv_path, sidecar_path=None) -> Dataset:
    """Read an exported dataset; the sidecar defaults to ``<stem>.json``."""
    csv_path = Path(csv_path)
    if sidecar_path is None:
        sidecar_path = csv_path.with_suffix(".json")
    try:
        raw = csv_path.read_text()
    except OSError as err:
        raise ValueError(f"cannot read {csv_path}: {err}") from err
    lines = raw.strip().splitlines()
    if not lines or lines[0] != EXPECTED_HEADER:
        head = lines[0] if lines else ""
        raise ValueError(f"bad CSV header: expected {EXPECTED_HEADER!r}, got {head!r}")
    table = np.array([[float(cell) for cell in line.split(",")]
                      for line in lines[1:]])
    if table.ndim != 2 or table.shape[1] != 9:
        raise ValueError("each data row must hold a time and 8 compartments")

    try:
        meta = json.loads(Path(sidecar_path).read_text())
    except OSError as err:
        raise ValueError(f"cannot read {sidecar_path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ValueError(f"invalid JSON in {sidecar_path}: {err}") from err
    missing = [key for key in SIDECAR_KEYS if key not in meta]
    if missing:
        raise ValueError(f"sidecar missing keys: {', '.join(missing)}")
    params = {name: float(meta["params"][name]) for name in PARAM_NAMES
              if name in meta["params"]}
    absent = [name for name in PARAM_NAMES if name not in params]
    if absent:
        raise ValueError(f"sidecar params missing: {', '.join(absent)}")
    return Dataset(
        times=table[:, 0],
        values=table[:, 1:],
        params=params,
        initial_state={k: float(v) for k, v in meta["initial_state"].items()},
        t0=float(meta["t0"]),
        horizon=float(meta["horizon"]),
        noise_level=float(meta["noise_level"]),
        seed=int(meta["seed"]),
        integrator=str(meta["integrator"]),
    )


def split_indices(n: int, seed: int,
                  fractions: Tuple[float, float, float] = (0.7, 0.15, 0.15)):
    """Shuffle 0..n-1 into sorted train/validation/test index arrays."""
    if abs(sum(fractions) - 1.0) > 1e-9 or min(fractions) < 0.0:
        raise ValueError("fractions must be non-negative and sum to 1")
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(round(fractions[0] * n))
    n_val = int(round(fractions[1] * n))
    train = np.sort(order[:n_train])
    val = np.sort(order[n_train:n_train + n_val])
    test = np.sort(order[n_train + n_val:])
    return train, val, test


@dataclass(frozen=True)
class Normalization:
    """Min-max scaling of time to [0, 1] and each compartment to [0, 1].

    Compartments with no spread keep a unit span so scaling stays
    invertible; their predictions are constant anyway.
    """

    t_lo: float
    t_hi: float
    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def fit(cls, times: np.ndarray, values: np.ndarray) -> "Normalization":
        return cls(float(times.min()), float(times.max()),
                   values.min(axis=0), values.max(axis=0))

    @property
    def span(self) -> np.ndarray:
        gap = self.hi - self.lo
        return np.where(gap > 0.0, gap, 1.0)

    def norm_t(self, t: np.ndarray) -> np.ndarray:
        return (t - self.t_lo) / (self.t_hi - self.t_lo)

    def norm_y(self, y):
        return (y - self.lo) / self.span

    def denorm_y(self, y):
        return y * self.span + self.lo
