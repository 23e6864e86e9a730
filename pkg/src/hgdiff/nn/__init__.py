"""Minimal dense autodiff, MLPs, Adam and losses."""

from .losses import cross_entropy, cross_entropy_loss, mean_absolute_error
from .mlp import MlpParams, mlp_apply, mlp_backward, mlp_forward
from .optim import Adam, adam_update
from .rng import make_rng
from .tensor import Tensor

__all__ = [
    "Adam",
    "MlpParams",
    "Tensor",
    "adam_update",
    "cross_entropy",
    "cross_entropy_loss",
    "make_rng",
    "mean_absolute_error",
    "mlp_apply",
    "mlp_backward",
    "mlp_forward",
]
