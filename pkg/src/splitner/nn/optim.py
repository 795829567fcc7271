"""Parameter updates: Adam (default) or plain SGD with a pluggable schedule."""

import logging
import math
from collections.abc import Callable
from collections.abc import Iterable
from typing import Literal

import torch
from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field
from torch import nn
from torch.optim.lr_scheduler import LambdaLR

from splitner.exceptions import TrainingDivergedError

logger = logging.getLogger(__name__)


class OptimizerConfig(BaseModel):
    """Update rule settings; defaults mirror common transformer training."""

    model_config = ConfigDict(frozen=True)

    mode: Literal["adam", "sgd"] = "adam"
    lr: float = Field(default=5e-5, gt=0)
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = Field(default=1e-8, gt=0)
    schedule: Literal["constant", "linear_decay"] = "constant"
    total_steps: int = Field(default=1, ge=1)


def _schedule(config: OptimizerConfig) -> Callable[[int], float]:
    if config.schedule == "linear_decay":
        total = config.total_steps
        return lambda step: max(0.0, 1.0 - step / total)
    return lambda step: 1.0


class ParameterOptimizer:
    """Applies one deterministic update per call and clears gradients.

    The parameters are exclusively owned by one trainer while this object
    exists.
    """

    def __init__(self, parameters: Iterable[nn.Parameter], config: OptimizerConfig) -> None:
        """Initialize the optimizer.

        Args:
            parameters: Trainable parameters
            config: Update rule settings
        """
        self._parameters = [p for p in parameters if p.requires_grad]
        self._config = config
        if config.mode == "sgd":
            self._optimizer: torch.optim.Optimizer = torch.optim.SGD(
                self._parameters, lr=config.lr
            )
        else:
            self._optimizer = torch.optim.Adam(
                self._parameters, lr=config.lr, betas=config.betas, eps=config.eps
            )
        self._scheduler = LambdaLR(self._optimizer, lr_lambda=_schedule(config))
        self._steps = 0

    @property
    def config(self) -> OptimizerConfig:
        """Update rule settings."""
        return self._config

    @property
    def steps(self) -> int:
        """Number of updates applied so far."""
        return self._steps

    @property
    def current_lr(self) -> float:
        """Learning rate the next update will use."""
        return float(self._optimizer.param_groups[0]["lr"])

    def step(self) -> None:
        """Update parameters from their accumulated gradients, then zero them.

        Parameters whose gradient was never populated are treated as having a
        zero gradient.

        Raises:
            TrainingDivergedError: If any gradient is NaN or infinite
        """
        for parameter in self._parameters:
            if parameter.grad is None:
                parameter.grad = torch.zeros_like(parameter)
            elif not bool(torch.isfinite(parameter.grad).all()):
                raise TrainingDivergedError(
                    f"non-finite gradient at update {self._steps + 1}"
                )
        self._optimizer.step()
        self._scheduler.step()
        self._optimizer.zero_grad(set_to_none=False)
        self._steps += 1
        if not math.isfinite(self.current_lr):
            raise TrainingDivergedError("learning rate became non-finite")
