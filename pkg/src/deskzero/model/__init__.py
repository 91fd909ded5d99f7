"""Networks, parameters, losses, and their verification tools."""
from .checkpoint import load_checkpoint, params_hash, require_layout, save_checkpoint
from .gradcheck import finite_difference_gradient, max_relative_error
from .losses import (
    LossBreakdown,
    alphazero_loss_and_grad,
    log_softmax,
    loss_alphazero,
    loss_muzero,
    muzero_loss_and_grad,
    softmax,
)
from .networks import (
    AlphaZeroModel,
    MuZeroModel,
    NetworkOutput,
    build_model,
    model_from_meta,
)
from .parameters import ParameterLayout, Parameters, sgd_step, zero_gradient

__all__ = [
    "AlphaZeroModel",
    "LossBreakdown",
    "MuZeroModel",
    "NetworkOutput",
    "ParameterLayout",
    "Parameters",
    "alphazero_loss_and_grad",
    "build_model",
    "finite_difference_gradient",
    "load_checkpoint",
    "log_softmax",
    "loss_alphazero",
    "loss_muzero",
    "max_relative_error",
    "model_from_meta",
    "muzero_loss_and_grad",
    "params_hash",
    "require_layout",
    "save_checkpoint",
    "sgd_step",
    "softmax",
    "zero_gradient",
]
