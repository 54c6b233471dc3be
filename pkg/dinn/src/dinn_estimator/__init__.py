"""Disease-informed neural network estimation for compartment trajectories."""
from .data import Dataset, Normalization, load_dataset, split_indices
from .evaluate import DinnMetrics, evaluate, export_predictions, regression_scores
from .l1 import caputo_l1, l1_decay_solution, ml_series, scheme_error
from .network import CompartmentNet
from .physics import PARAM_NAMES, STATE_NAMES, caputo_residual, compartment_rates
from .train import (
    CHI_CORE,
    CHI_EXTENDED,
    DEFAULT_BOUNDS,
    DinnConfig,
    TrainingDivergence,
    TrainResult,
    train,
)

__version__ = "1.0.0"

__all__ = [
    "CHI_CORE",
    "CHI_EXTENDED",
    "CompartmentNet",
    "Dataset",
    "DEFAULT_BOUNDS",
    "DinnConfig",
    "DinnMetrics",
    "Normalization",
    "PARAM_NAMES",
    "STATE_NAMES",
    "TrainingDivergence",
    "TrainResult",
    "caputo_l1",
    "caputo_residual",
    "compartment_rates",
    "evaluate",
    "export_predictions",
    "l1_decay_solution",
    "load_dataset",
    "ml_series",
    "regression_scores",
    "scheme_error",
    "split_indices",
    "train",
]
