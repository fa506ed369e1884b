"""Gaussian dynamics and pump-shape optimization of a hybrid
cavity / mirror / BEC optomechanical system."""

__version__ = "0.1.0"

from .params import LabInputs, SystemParams, derive_params, drift_matrix, noise_matrix, steady_state  # noqa: E402

__all__ = ["LabInputs", "SystemParams", "derive_params", "drift_matrix", "noise_matrix",
           "steady_state", "__version__"]
