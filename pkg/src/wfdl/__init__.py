"""Autoencoder anomaly detection with a weighted frequency-domain loss."""

from .estimator import WFDLAnomalyDetector
from .loss import LossConfig, frequency_distance, mse_loss, wfdl_gradient, wfdl_loss
from .model import ArchConfig, AutoencoderParams, backward, forward, init_params, reconstruct
from .optim import RAdamHyper, RAdamState, radam_init, radam_step
from .scoring import EvalReport, ScoredSample, anomaly_score, auroc, residual_map
from .spectral import (dft2, idft2, magnitude, radial_filter, shift_spectrum, spectrum_image,
                       weight_matrix)

__all__ = [
    "WFDLAnomalyDetector",
    "LossConfig", "frequency_distance", "mse_loss", "wfdl_gradient", "wfdl_loss",
    "ArchConfig", "AutoencoderParams", "backward", "forward", "init_params", "reconstruct",
    "RAdamHyper", "RAdamState", "radam_init", "radam_step",
    "EvalReport", "ScoredSample", "anomaly_score", "auroc", "residual_map",
    "dft2", "idft2", "magnitude", "radial_filter", "shift_spectrum", "spectrum_image",
    "weight_matrix",
]

__version__ = "0.1.0"
