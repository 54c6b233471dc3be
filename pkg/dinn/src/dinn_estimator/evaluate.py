"""Goodness-of-fit metrics and prediction export, in original units."""
import json
from dataclasses import asdict, dataclass
from typing import Dict, Optional

import numpy as np

from .data import Dataset
from .physics import STATE_NAMES
from .train import TrainResult


@dataclass(frozen=True)
class DinnMetrics:
    """Per-compartment test scores and parameter-recovery errors.

    A compartment with zero variance on the test split has no defined
    R-squared or NMSE; those entries are None.  Parameter errors are
    relative percentages against the sidecar truth (None when no truth
    was supplied, or per entry when the true value is zero).
    """

    r2: Dict[str, Optional[float]]
    nmse: Dict[str, Optional[float]]
    parameter_errors: Optional[Dict[str, Optional[float]]]
    chi: Dict[str, float]

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")


def regression_scores(y_true: np.ndarray, y_pred: np.ndarray):
    """R-squared and NMSE per compartment column."""
    if y_true.shape != y_pred.shape or y_true.ndim != 2 or y_true.shape[1] != 8:
        raise ValueError("need matching (n, 8) arrays")
    r2: Dict[str, Optional[float]] = {}
    nmse: Dict[str, Optional[float]] = {}
    for j, name in enumerate(STATE_NAMES):
        truth = y_true[:, j]
        spread = float(np.sum((truth - truth.mean()) ** 2))
        if spread == 0.0:
            r2[name] = None
            nmse[name] = None
            continue
        sse = float(np.sum((truth - y_pred[:, j]) ** 2))
        r2[name] = 1.0 - sse / spread
        nmse[name] = (sse / len(truth)) / float(np.var(truth))
    return r2, nmse


def evaluate(result: TrainResult, dataset: Dataset,
             true_params: Optional[Dict[str, float]] = None) -> DinnMetrics:
    """Score the fit on the held-out test split."""
    idx = result.test_indices
    y_true = dataset.values[idx]
    y_pred = result.predict(dataset.times[idx])
    r2, nmse = regression_scores(y_true, y_pred)

    errors: Optional[Dict[str, Optional[float]]] = None
    if true_params is not None:
        errors = {}
        for name, estimate in result.chi.items():
            truth = float(true_params[name])
            if truth == 0.0:
                errors[name] = None
            else:
                errors[name] = 100.0 * abs(estimate - truth) / abs(truth)
    return DinnMetrics(r2=r2, nmse=nmse, parameter_errors=errors,
                       chi=dict(result.chi))


def export_predictions(result: TrainResult, dataset: Dataset, path,
                       n_points: Optional[int] = None) -> None:
    """Write the fitted trajectory in the exporter's CSV schema."""
    count = n_points if n_points is not None else len(dataset.times)
    if count < 2:
        raise ValueError("n_points must be at least 2")
    times = np.linspace(dataset.t0, dataset.horizon, count)
    values = result.predict(times)
    with open(path, "w", newline="") as fh:
        fh.write("t," + ",".join(STATE_NAMES) + "\n")
        for t, row in zip(times, values):
            cells = ",".join(format(x, ".17g") for x in row)
            fh.write(f"{t:.17g},{cells}\n")
