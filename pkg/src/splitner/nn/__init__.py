"""Layers, losses, optimizer and checkpoint format built on torch autograd."""

from splitner.nn.checkpoint import ParamStore
from splitner.nn.checkpoint import load_checkpoint
from splitner.nn.checkpoint import save_checkpoint
from splitner.nn.gradcheck import grad_check
from splitner.nn.layers import initialize_parameters
from splitner.nn.losses import cross_entropy
from splitner.nn.losses import dice_loss
from splitner.nn.optim import OptimizerConfig
from splitner.nn.optim import ParameterOptimizer

__all__ = [
    "OptimizerConfig",
    "ParamStore",
    "ParameterOptimizer",
    "cross_entropy",
    "dice_loss",
    "grad_check",
    "initialize_parameters",
    "load_checkpoint",
    "save_checkpoint",
]
