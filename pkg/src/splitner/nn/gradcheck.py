"""Finite-difference verification of analytic gradients."""

from collections.abc import Callable
from collections.abc import Sequence

import torch
from torch import Tensor


def _scalarize(output: Tensor, weights: Tensor | None) -> Tensor:
    if output.dim() == 0:
        return output
    assert weights is not None
    return (output * weights).sum()


def grad_check(
    fn: Callable[[], Tensor],
    tensors: Sequence[Tensor],
    epsilon: float = 1e-5,
    seed: int = 0,
    scale_floor: float = 1e-3,
) -> float:
    """Compare autograd gradients with central finite differences.

    ``fn`` is re-evaluated while each element of each tensor is perturbed in
    place; non-scalar outputs are reduced with a fixed random projection.
    The error of one element is ``|analytic - numeric| / max(|analytic|,
    |numeric|, scale_floor)``, so gradients below ``scale_floor`` are compared
    by absolute error. Run in float64 for tight bounds.

    Args:
        fn: Closure computing the output from ``tensors``
        tensors: Leaf tensors (inputs and parameters) to check
        epsilon: Perturbation size
        seed: Seed of the projection weights
        scale_floor: Lower bound of the error denominator

    Returns:
        Maximum error over every element of every tensor
    """
    leaves = list(tensors)
    for tensor in leaves:
        tensor.requires_grad_(True)

    output = fn()
    weights = None
    if output.dim() > 0:
        generator = torch.Generator().manual_seed(seed)
        weights = torch.randn(output.shape, generator=generator, dtype=output.dtype)

    analytic = torch.autograd.grad(
        _scalarize(output, weights), leaves, allow_unused=True
    )

    worst = 0.0
    with torch.no_grad():
        for tensor, gradient in zip(leaves, analytic):
            if gradient is None:
                gradient = torch.zeros_like(tensor)
            flat = tensor.view(-1)
            flat_gradient = gradient.reshape(-1)
            for i in range(flat.numel()):
                original = flat[i].item()
                flat[i] = original + epsilon
                plus = _scalarize(fn(), weights).item()
                flat[i] = original - epsilon
                minus = _scalarize(fn(), weights).item()
                flat[i] = original
                numeric = (plus - minus) / (2.0 * epsilon)
                exact = flat_gradient[i].item()
                scale = max(abs(exact), abs(numeric), scale_floor)
                worst = max(worst, abs(exact - numeric) / scale)
    return worst
