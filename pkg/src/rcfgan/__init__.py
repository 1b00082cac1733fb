"""Characteristic-function GAN: distance, autodiff core, trainer, diagnostics."""

from .autodiff import GraphError, ShapeError, Tensor, backward
from .ecf import (CfLossConfig, EcfEval, amplitude_phase, cf_distance,
                  distance_between, ecf)
from .freq import FreqSampler, LatentSpec, sample_fixed, sample_latent
from .kernels import BACKEND
from .nets import Mlp, MlpSpec, build_default_nets
from .train import TrainConfig, TrainingDiverged, train

__version__ = "0.1.0"

__all__ = [
    "Tensor", "backward", "ShapeError", "GraphError",
    "CfLossConfig", "EcfEval", "ecf", "cf_distance", "distance_between",
    "amplitude_phase", "FreqSampler", "LatentSpec", "sample_fixed",
    "sample_latent", "Mlp", "MlpSpec", "build_default_nets",
    "TrainConfig", "TrainingDiverged", "train", "BACKEND", "__version__",
]
