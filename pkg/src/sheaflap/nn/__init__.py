"""Sheaf hypergraph neural networks on a small numpy autodiff engine."""

from .autograd import Tensor, grad, parameter
from .model import ModelConfig, SheafHyperNet, input_embed, layer_forward
from .train import Adam, TrainReport, dirichlet_probe, train

__all__ = [
    "Tensor", "grad", "parameter", "ModelConfig", "SheafHyperNet", "input_embed", "layer_forward",
    "Adam", "TrainReport", "dirichlet_probe", "train",
]
