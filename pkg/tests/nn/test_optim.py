"""Tests for the parameter optimizer."""

import pytest
import torch
from torch import nn

from splitner.exceptions import TrainingDivergedError
from splitner.nn.optim import OptimizerConfig
from splitner.nn.optim import ParameterOptimizer


def _parameter(value: float = 1.0) -> nn.Parameter:
    return nn.Parameter(torch.tensor([value]))


def test_sgd_step_and_zero_grad() -> None:
    """Test a plain gradient step clears the gradient."""
    parameter = _parameter()
    optimizer = ParameterOptimizer([parameter], OptimizerConfig(mode="sgd", lr=0.1))
    parameter.grad = torch.tensor([2.0])

    optimizer.step()

    assert parameter.item() == pytest.approx(0.8)
    assert parameter.grad is not None
    assert parameter.grad.item() == 0.0
    assert optimizer.steps == 1


def test_missing_gradient_is_zero() -> None:
    """Test that untouched parameters do not move."""
    parameter = _parameter()
    optimizer = ParameterOptimizer([parameter], OptimizerConfig(mode="sgd", lr=0.1))

    optimizer.step()

    assert parameter.item() == 1.0


def test_adam_first_step_moves_by_lr() -> None:
    """Test that the bias-corrected first Adam step has size lr."""
    parameter = _parameter()
    optimizer = ParameterOptimizer([parameter], OptimizerConfig(lr=0.1))
    parameter.grad = torch.tensor([3.0])

    optimizer.step()

    assert parameter.item() == pytest.approx(0.9, abs=1e-6)


def test_linear_decay_schedule() -> None:
    """Test that the learning rate decays linearly to zero."""
    optimizer = ParameterOptimizer(
        [_parameter()],
        OptimizerConfig(mode="sgd", lr=1.0, schedule="linear_decay", total_steps=4),
    )

    optimizer.step()
    assert optimizer.current_lr == pytest.approx(0.75)
    for _ in range(3):
        optimizer.step()
    assert optimizer.current_lr == pytest.approx(0.0)


def test_non_finite_gradient_raises() -> None:
    """Test that NaN gradients stop training."""
    parameter = _parameter()
    optimizer = ParameterOptimizer([parameter], OptimizerConfig())
    parameter.grad = torch.tensor([float("nan")])

    with pytest.raises(TrainingDivergedError):
        optimizer.step()


def test_frozen_parameters_are_skipped() -> None:
    """Test that parameters without gradients enabled are not updated."""
    frozen = _parameter()
    frozen.requires_grad_(False)
    trained = _parameter()
    optimizer = ParameterOptimizer([frozen, trained], OptimizerConfig(mode="sgd", lr=0.1))
    trained.grad = torch.tensor([5.0])

    optimizer.step()

    assert frozen.item() == 1.0
    assert trained.item() == pytest.approx(0.5)
    assert optimizer.config.mode == "sgd"
