"""Functional layer forwards with shape checking, and parameter initialization.

Modules in :mod:`splitner.features` and :mod:`splitner.models` own their
parameters as ``torch.nn`` submodules and compute through these functions,
so every shape error names the layer that raised it.
"""

import math

import torch
import torch.nn.functional as F
from torch import Tensor
from torch import nn
from torch.nn.utils.rnn import pack_padded_sequence
from torch.nn.utils.rnn import pad_packed_sequence

from splitner.exceptions import ShapeMismatchError

EMBEDDING_INIT_RANGE = 0.1


def _shape(tensor: Tensor) -> tuple[int, ...]:
    return tuple(tensor.shape)


def embedding(ids: Tensor, weight: Tensor) -> Tensor:
    """Look up rows of ``weight``.

    Args:
        ids: Integer tensor of any shape
        weight: ``[rows, dim]`` table

    Returns:
        Tensor of shape ``ids.shape + (dim,)``
    """
    if weight.dim() != 2 or ids.is_floating_point():
        raise ShapeMismatchError("embedding", _shape(ids), _shape(weight))
    if ids.numel() and (int(ids.min()) < 0 or int(ids.max()) >= weight.shape[0]):
        raise ShapeMismatchError("embedding", _shape(ids), _shape(weight))
    return F.embedding(ids, weight)


def conv1d(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """One-dimensional convolution with "same" padding.

    Kernels longer than the input still produce one output per position.

    Args:
        x: ``[batch, in_channels, length]``
        weight: ``[out_channels, in_channels, kernel]``
        bias: ``[out_channels]`` or None

    Returns:
        ``[batch, out_channels, length]``
    """
    if x.dim() != 3 or weight.dim() != 3 or x.shape[1] != weight.shape[1]:
        raise ShapeMismatchError("conv1d", _shape(x), _shape(weight))
    if bias is not None and bias.shape != (weight.shape[0],):
        raise ShapeMismatchError("conv1d", _shape(weight), _shape(bias))
    return F.conv1d(x, weight, bias, padding="same")


def maxpool_over_time(x: Tensor, lengths: Tensor | None = None) -> Tensor:
    """Max over the last (time) dimension, ignoring padded positions.

    Rows whose length is zero pool to zero.

    Args:
        x: ``[..., length]``
        lengths: Valid lengths, shaped like ``x`` without its last two
            dimensions (one length per sequence), or None

    Returns:
        ``x`` reduced over its last dimension
    """
    if x.dim() == 0 or x.shape[-1] == 0:
        raise ShapeMismatchError("maxpool_over_time", _shape(x))
    if lengths is None:
        return x.max(dim=-1).values
    if x.dim() < 2 or _shape(lengths) != _shape(x)[:-2]:
        raise ShapeMismatchError("maxpool_over_time", _shape(x), _shape(lengths))
    positions = torch.arange(x.shape[-1], device=x.device)
    valid = positions < lengths[..., None, None]
    pooled = x.masked_fill(~valid, float("-inf")).max(dim=-1).values
    empty = (lengths == 0)[..., None]
    return pooled.masked_fill(empty, 0.0)


def affine(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """``x @ weight.T + bias`` over the last dimension.

    Args:
        x: ``[..., in_features]``
        weight: ``[out_features, in_features]``
        bias: ``[out_features]`` or None

    Returns:
        ``[..., out_features]``
    """
    if weight.dim() != 2 or x.shape[-1] != weight.shape[1]:
        raise ShapeMismatchError("affine", _shape(x), _shape(weight))
    if bias is not None and bias.shape != (weight.shape[0],):
        raise ShapeMismatchError("affine", _shape(weight), _shape(bias))
    return F.linear(x, weight, bias)


def relu(x: Tensor) -> Tensor:
    """Elementwise ``max(x, 0)``."""
    return torch.relu(x)


def softmax(x: Tensor, dim: int = -1) -> Tensor:
    """Row-normalized exponentials (log-sum-exp stabilized)."""
    if x.dim() == 0:
        raise ShapeMismatchError("softmax", _shape(x))
    return torch.softmax(x, dim=dim)


def bilstm(x: Tensor, lengths: Tensor, lstm: nn.LSTM) -> Tensor:
    """Run a bidirectional LSTM over post-padded sequences.

    Padding never leaks into the backward direction; padded positions of the
    output are zero.

    Args:
        x: ``[batch, length, input_size]``
        lengths: ``[batch]`` valid lengths (each >= 1)
        lstm: Bidirectional, batch-first LSTM

    Returns:
        ``[batch, length, 2 * hidden_size]``
    """
    if not (lstm.bidirectional and lstm.batch_first):
        raise ShapeMismatchError("bilstm", _shape(x))
    if x.dim() != 3 or x.shape[2] != lstm.input_size:
        raise ShapeMismatchError("bilstm", _shape(x), (lstm.input_size,))
    if _shape(lengths) != (x.shape[0],) or int(lengths.min()) < 1:
        raise ShapeMismatchError("bilstm", _shape(x), _shape(lengths))
    packed = pack_padded_sequence(
        x, lengths.cpu(), batch_first=True, enforce_sorted=False
    )
    output, _ = lstm(packed)
    padded, _ = pad_packed_sequence(output, batch_first=True, total_length=x.shape[1])
    return padded


def _glorot_(tensor: Tensor, generator: torch.Generator) -> None:
    receptive = math.prod(tensor.shape[2:]) if tensor.dim() > 2 else 1
    fan_in = tensor.shape[1] * receptive
    fan_out = tensor.shape[0] * receptive
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    tensor.uniform_(-bound, bound, generator=generator)


@torch.no_grad()
def initialize_parameters(module: nn.Module, seed: int) -> None:
    """Deterministically initialize every parameter of ``module``.

    Embeddings draw from uniform(-0.1, 0.1) with the padding row zeroed;
    affine, convolution, attention and LSTM weight matrices use Glorot
    uniform scaling; biases start at zero; layer norms keep unit scale.

    Args:
        module: Module to initialize in place
        seed: Seed of the dedicated generator
    """
    generator = torch.Generator().manual_seed(seed)
    for submodule in module.modules():
        if isinstance(submodule, nn.Embedding):
            submodule.weight.uniform_(
                -EMBEDDING_INIT_RANGE, EMBEDDING_INIT_RANGE, generator=generator
            )
            if submodule.padding_idx is not None:
                submodule.weight[submodule.padding_idx].zero_()
        elif isinstance(submodule, (nn.Linear, nn.Conv1d)):
            _glorot_(submodule.weight, generator)
            if submodule.bias is not None:
                submodule.bias.zero_()
        elif isinstance(submodule, nn.LSTM):
            for name, parameter in submodule.named_parameters():
                if name.startswith("weight"):
                    _glorot_(parameter, generator)
                else:
                    parameter.zero_()
        elif isinstance(submodule, nn.MultiheadAttention):
            if submodule.in_proj_weight is not None:
                _glorot_(submodule.in_proj_weight, generator)
            if submodule.in_proj_bias is not None:
                submodule.in_proj_bias.zero_()
        elif isinstance(submodule, nn.LayerNorm):
            nn.init.ones_(submodule.weight)
            nn.init.zeros_(submodule.bias)
