"""Desk-scale transformer encoder standing in for a pretrained BERT."""

import torch
from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field
from pydantic import model_validator
from torch import Tensor
from torch import nn

from splitner.exceptions import ShapeMismatchError
from splitner.nn import layers

NUM_SEGMENTS = 2


class EncoderConfig(BaseModel):
    """Transformer encoder sizes (BERT-base is 12 layers, 12 heads, 768/3072)."""

    model_config = ConfigDict(frozen=True)

    layers: int = Field(default=2, ge=1)
    heads: int = Field(default=4, ge=1)
    hidden_dim: int = Field(default=128, ge=2)
    ff_dim: int = Field(default=256, ge=1)
    max_seq_len: int = Field(default=256, ge=4)
    dropout: float = Field(default=0.1, ge=0.0, lt=1.0)

    @model_validator(mode="after")
    def _check_heads(self) -> "EncoderConfig":
        if self.hidden_dim % self.heads != 0:
            raise ValueError(
                f"hidden_dim {self.hidden_dim} not divisible by heads {self.heads}"
            )
        return self


class EncoderBlock(nn.Module):
    """Post-norm self-attention block."""

    def __init__(self, config: EncoderConfig) -> None:
        super().__init__()
        self.attention = nn.MultiheadAttention(
            config.hidden_dim, config.heads, dropout=config.dropout, batch_first=True
        )
        self.attention_norm = nn.LayerNorm(config.hidden_dim)
        self.intermediate = nn.Linear(config.hidden_dim, config.ff_dim)
        self.output = nn.Linear(config.ff_dim, config.hidden_dim)
        self.output_norm = nn.LayerNorm(config.hidden_dim)
        self.dropout = nn.Dropout(config.dropout)

    def forward(self, x: Tensor, padding_mask: Tensor) -> Tensor:
        attended, _ = self.attention(
            x, x, x, key_padding_mask=padding_mask, need_weights=False
        )
        x = self.attention_norm(x + self.dropout(attended))
        hidden = layers.relu(
            layers.affine(x, self.intermediate.weight, self.intermediate.bias)
        )
        projected = layers.affine(
            self.dropout(hidden), self.output.weight, self.output.bias
        )
        return self.output_norm(x + self.dropout(projected))


class TransformerEncoder(nn.Module):
    """Token, position and segment embeddings followed by encoder blocks."""

    def __init__(self, config: EncoderConfig, vocab_size: int, pad_id: int) -> None:
        super().__init__()
        self.config = config
        self.token_embedding = nn.Embedding(vocab_size, config.hidden_dim, padding_idx=pad_id)
        self.position_embedding = nn.Embedding(config.max_seq_len, config.hidden_dim)
        self.segment_embedding = nn.Embedding(NUM_SEGMENTS, config.hidden_dim)
        self.embedding_norm = nn.LayerNorm(config.hidden_dim)
        self.dropout = nn.Dropout(config.dropout)
        self.blocks = nn.ModuleList(EncoderBlock(config) for _ in range(config.layers))

    def forward(self, input_ids: Tensor, segment_ids: Tensor, attention_mask: Tensor) -> Tensor:
        """Contextual representation of every position.

        Args:
            input_ids: ``[batch, length]`` subtoken ids
            segment_ids: ``[batch, length]`` 0 for question, 1 for sentence
            attention_mask: ``[batch, length]`` True at real positions

        Returns:
            ``[batch, length, hidden_dim]``
        """
        batch, length = input_ids.shape
        if length > self.config.max_seq_len:
            raise ShapeMismatchError(
                "encoder", tuple(input_ids.shape), (self.config.max_seq_len,)
            )
        if segment_ids.shape != input_ids.shape or attention_mask.shape != input_ids.shape:
            raise ShapeMismatchError(
                "encoder",
                tuple(input_ids.shape),
                tuple(segment_ids.shape),
                tuple(attention_mask.shape),
            )
        positions = torch.arange(length, device=input_ids.device).expand(batch, length)
        x = (
            layers.embedding(input_ids, self.token_embedding.weight)
            + layers.embedding(positions, self.position_embedding.weight)
            + layers.embedding(segment_ids, self.segment_embedding.weight)
        )
        x = self.dropout(self.embedding_norm(x))
        padding_mask = ~attention_mask
        for block in self.blocks:
            x = block(x, padding_mask)
        return x
