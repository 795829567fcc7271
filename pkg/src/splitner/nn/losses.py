"""Training objectives: masked cross entropy and smoothed soft dice."""

import torch
import torch.nn.functional as F
from torch import Tensor

from splitner.exceptions import LossError
from splitner.exceptions import ShapeMismatchError


def cross_entropy(logits: Tensor, targets: Tensor, mask: Tensor | None = None) -> Tensor:
    """Mean negative log-likelihood over masked-in positions.

    Args:
        logits: ``[..., classes]`` unnormalized scores
        targets: Integer class ids shaped like ``logits`` without the class axis
        mask: Boolean positions to include (all when None)

    Returns:
        Scalar loss; exactly zero (and still differentiable) when nothing is
        masked in

    Raises:
        ShapeMismatchError: If shapes disagree
        LossError: If a target id is out of range
    """
    if logits.dim() < 1 or tuple(targets.shape) != tuple(logits.shape[:-1]):
        raise ShapeMismatchError("cross_entropy", tuple(logits.shape), tuple(targets.shape))
    if mask is None:
        mask = torch.ones_like(targets, dtype=torch.bool)
    elif tuple(mask.shape) != tuple(targets.shape):
        raise ShapeMismatchError("cross_entropy", tuple(targets.shape), tuple(mask.shape))

    num_classes = logits.shape[-1]
    selected = targets[mask]
    if selected.numel() and (int(selected.min()) < 0 or int(selected.max()) >= num_classes):
        raise LossError(
            f"cross_entropy: target ids must lie in [0, {num_classes}), "
            f"got range [{int(selected.min())}, {int(selected.max())}]"
        )
    if selected.numel() == 0:
        return logits.sum() * 0.0

    log_probs = F.log_softmax(logits[mask], dim=-1)
    picked = log_probs.gather(-1, selected.unsqueeze(-1)).squeeze(-1)
    return -picked.mean()


def dice_loss(probs: Tensor, targets: Tensor, gamma: float = 1.0) -> Tensor:
    """Smoothed soft-dice loss, averaged over samples.

    Per sample: ``1 - (2 * sum(p * y) + gamma) / (sum(p**2) + sum(y**2) + gamma)``.
    The value lies in [0, 1) and is 0 exactly when ``p == y``.

    Args:
        probs: ``[samples, classes]`` distributions
        targets: ``[samples, classes]`` one-hot rows, or ``[samples]`` class ids
        gamma: Smoothing constant, > 0

    Returns:
        Scalar loss

    Raises:
        LossError: If gamma <= 0 or a class id is out of range
        ShapeMismatchError: If shapes disagree
    """
    if gamma <= 0:
        raise LossError(f"dice_loss: gamma must be > 0, got {gamma}")
    if probs.dim() == 1:
        probs = probs.unsqueeze(0)
        if targets.dim() == 1 and targets.is_floating_point():
            targets = targets.unsqueeze(0)
        elif targets.dim() == 0:
            targets = targets.unsqueeze(0)
    if probs.dim() != 2:
        raise ShapeMismatchError("dice_loss", tuple(probs.shape), tuple(targets.shape))
    num_classes = probs.shape[1]
    if not targets.is_floating_point():
        if targets.numel() and (int(targets.min()) < 0 or int(targets.max()) >= num_classes):
            raise LossError(f"dice_loss: class ids must lie in [0, {num_classes})")
        targets = F.one_hot(targets, num_classes).to(probs.dtype)
    if tuple(targets.shape) != tuple(probs.shape):
        raise ShapeMismatchError("dice_loss", tuple(probs.shape), tuple(targets.shape))

    intersection = (probs * targets).sum(dim=1)
    denominator = (probs * probs).sum(dim=1) + (targets * targets).sum(dim=1)
    per_sample = 1.0 - (2.0 * intersection + gamma) / (denominator + gamma)
    return per_sample.mean()
