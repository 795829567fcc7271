"""Mini-batch training loop shared by every task model."""

import logging
import math
import time
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import torch

from splitner.config import RunConfig
from splitner.corpus import Dataset
from splitner.exceptions import TrainingDivergedError
from splitner.models.base import TaskModel
from splitner.models.inputs import ModelInput
from splitner.models.inputs import collate
from splitner.nn import OptimizerConfig
from splitner.nn import ParameterOptimizer

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EpochResult:
    """Outcome of one pass over the training inputs."""

    epoch: int
    loss: float
    seconds: float
    samples: int


def epoch_order(num_inputs: int, seed: int, epoch: int) -> list[int]:
    """Shuffled input order of one epoch, fixed by ``(seed, epoch)``."""
    rng = np.random.default_rng([seed, epoch])
    return [int(i) for i in rng.permutation(num_inputs)]


class Trainer:
    """Owns a model's optimizer and its labelled inputs for a training run."""

    def __init__(
        self,
        model: TaskModel,
        dataset: Dataset,
        config: RunConfig,
        inputs: Sequence[ModelInput] | None = None,
    ) -> None:
        """Initialize the trainer.

        Args:
            model: Model to train in place
            dataset: Training dataset
            config: Run configuration (batch size, epochs, seed, optimizer)
            inputs: Prebuilt training inputs; built from ``dataset`` when None
        """
        self.model = model
        self.config = config
        self.inputs = list(inputs) if inputs is not None else model.training_inputs(dataset)
        steps_per_epoch = max(1, math.ceil(len(self.inputs) / config.batch_size))
        self.optimizer = ParameterOptimizer(
            model.parameters(),
            OptimizerConfig(
                mode=config.optimizer,
                lr=config.lr,
                schedule=config.lr_schedule,
                total_steps=steps_per_epoch * config.epochs,
            ),
        )

    def train_epoch(self, epoch: int) -> EpochResult:
        """Run one shuffled pass over the inputs.

        Args:
            epoch: Zero-based epoch number (part of the shuffle and dropout
                seed)

        Returns:
            EpochResult with the mean batch loss and elapsed wall time

        Raises:
            TrainingDivergedError: If a loss or gradient is not finite
        """
        started = time.perf_counter()
        if not self.inputs:
            logger.warning(f"No training inputs for the {self.model.kind}; skipping epoch {epoch}")
            return EpochResult(epoch, 0.0, time.perf_counter() - started, 0)

        torch.manual_seed(self.config.seed * 1_000_003 + epoch)
        self.model.train()
        order = epoch_order(len(self.inputs), self.config.seed, epoch)
        size = self.config.batch_size
        total = 0.0
        batches = 0
        for start in range(0, len(order), size):
            batch = collate(
                [self.inputs[i] for i in order[start : start + size]],
                self.model.vocab.pad_id,
            )
            loss = self.model.compute_loss(batch)
            value = float(loss.detach())
            if not math.isfinite(value):
                raise TrainingDivergedError(
                    f"{self.model.kind} loss became {value} at epoch {epoch}, batch {batches}"
                )
            loss.backward()
            self.optimizer.step()
            total += value
            batches += 1
        self.model.eval()

        result = EpochResult(
            epoch=epoch,
            loss=total / batches,
            seconds=time.perf_counter() - started,
            samples=len(self.inputs),
        )
        logger.info(
            f"{self.model.kind} epoch {epoch}: loss {result.loss:.6f}",
            extra={
                "model": self.model.kind,
                "epoch": epoch,
                "loss": result.loss,
                "seconds": result.seconds,
                "samples": result.samples,
            },
        )
        return result


def train_epoch(
    model: TaskModel, dataset: Dataset, config: RunConfig, epoch: int = 0
) -> EpochResult:
    """Train a model for a single epoch with a fresh optimizer.

    Args:
        model: Model to train in place
        dataset: Training dataset
        config: Run configuration
        epoch: Epoch number used for shuffling

    Returns:
        EpochResult
    """
    return Trainer(model, dataset, config).train_epoch(epoch)


def fit(model: TaskModel, dataset: Dataset, config: RunConfig) -> list[EpochResult]:
    """Train a model for ``config.epochs`` epochs.

    Args:
        model: Model to train in place
        dataset: Training dataset
        config: Run configuration

    Returns:
        Per-epoch history
    """
    trainer = Trainer(model, dataset, config)
    logger.info(
        f"Training {model.kind} on {len(trainer.inputs)} inputs for {config.epochs} epochs"
    )
    return [trainer.train_epoch(epoch) for epoch in range(config.epochs)]
