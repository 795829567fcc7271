"""Orthographic patterns and the character / pattern feature extractors.

A subtoken's *pattern* collapses whole-token shapes to one symbol (``U``
all-uppercase, ``L`` all-lowercase, ``D`` all-digit, ``C``/``S`` for the
special tokens) and otherwise maps each character (``u``, ``l``, ``d``,
other characters kept). The character extractor embeds a subtoken's
characters, runs parallel same-padded CNNs, max-pools and projects; the
pattern extractor runs the same CNN stack over pattern strings and then a
BiLSTM across the sequence, so it is contextual where the character
extractor is not.
"""

from collections.abc import Sequence

import torch
from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field
from torch import Tensor
from torch import nn

from splitner.exceptions import FeatureError
from splitner.nn import layers
from splitner.subword import CLS
from splitner.subword import CONTINUATION
from splitner.subword import SEP
from splitner.subword import Vocab

PATTERN_ALPHABET = "ULDuldCS"
PAD_CHAR_ID = 0
UNK_CHAR_ID = 1


def _strip_continuation(token: str) -> str:
    if token.startswith(CONTINUATION) and len(token) > len(CONTINUATION):
        return token[len(CONTINUATION) :]
    return token


def pattern_of(token: str) -> str:
    """Orthographic pattern of one (sub)token.

    Args:
        token: Non-empty token; a leading ``##`` is dropped first

    Returns:
        Pattern string

    Raises:
        FeatureError: If the token is empty
    """
    if not token:
        raise FeatureError("cannot compute the pattern of an empty token")
    if token == CLS:
        return "C"
    if token == SEP:
        return "S"
    text = _strip_continuation(token)
    if all(c.isupper() for c in text):
        return "U"
    if all(c.islower() for c in text):
        return "L"
    if all(c.isdigit() for c in text):
        return "D"
    shape = []
    for c in text:
        if c.isupper():
            shape.append("u")
        elif c.islower():
            shape.append("l")
        elif c.isdigit():
            shape.append("d")
        else:
            shape.append(c)
    return "".join(shape)


def pattern_sequence(subtokens: Sequence[str]) -> list[str]:
    """Patterns of a model input, element by element."""
    return [pattern_of(subtoken) for subtoken in subtokens]


class CharIndex:
    """Symbol-to-id table for character-level embeddings (PAD=0, UNK=1)."""

    def __init__(self, symbols: Sequence[str]) -> None:
        """Initialize the table.

        Args:
            symbols: Distinct single characters in id order (from id 2)
        """
        if len(set(symbols)) != len(symbols) or any(len(s) != 1 for s in symbols):
            raise FeatureError("character index needs distinct single characters")
        self._symbols = tuple(symbols)
        self._ids = {symbol: i + 2 for i, symbol in enumerate(self._symbols)}

    @classmethod
    def from_vocab(cls, vocab: Vocab) -> "CharIndex":
        """Characters of a vocabulary's single-character entries."""
        return cls(vocab.characters)

    @classmethod
    def for_patterns(cls, vocab: Vocab) -> "CharIndex":
        """Pattern alphabet plus every non-alphanumeric vocabulary character."""
        extra = [c for c in vocab.characters if not c.isalnum() and c not in PATTERN_ALPHABET]
        return cls(tuple(PATTERN_ALPHABET) + tuple(extra))

    @property
    def symbols(self) -> tuple[str, ...]:
        return self._symbols

    def encode(self, text: str) -> list[int]:
        """Ids of the characters of ``text`` (unknown characters map to UNK)."""
        return [self._ids.get(c, UNK_CHAR_ID) for c in text]

    def __len__(self) -> int:
        return len(self._symbols) + 2


def character_ids(
    rows: Sequence[Sequence[str]], index: CharIndex
) -> tuple[Tensor, Tensor]:
    """Encode a batch of string sequences into padded character ids.

    Args:
        rows: ``batch`` sequences of strings (subtokens or patterns)
        index: Character table

    Returns:
        ``ids`` of shape ``[batch, length, chars]`` and ``lengths`` of shape
        ``[batch, length]``; padding positions have length 0
    """
    encoded = [[index.encode(text) for text in row] for row in rows]
    width = max((len(row) for row in encoded), default=0)
    chars = max((len(ids) for row in encoded for ids in row), default=0)
    ids = torch.full((len(rows), max(width, 1), max(chars, 1)), PAD_CHAR_ID, dtype=torch.long)
    lengths = torch.zeros((len(rows), max(width, 1)), dtype=torch.long)
    for b, row in enumerate(encoded):
        for t, char_ids in enumerate(row):
            ids[b, t, : len(char_ids)] = torch.tensor(char_ids, dtype=torch.long)
            lengths[b, t] = len(char_ids)
    return ids, lengths


class CharFeatureConfig(BaseModel):
    """Character CNN hyperparameters."""

    model_config = ConfigDict(frozen=True)

    kernel_sizes: tuple[int, ...] = (1, 2, 3, 4, 5)
    filters_per_cnn: int = Field(default=16, ge=1)
    embedding_dim: int = Field(default=50, ge=1)
    output_dim: int = Field(default=768, ge=1)

    @property
    def concat_width(self) -> int:
        return len(self.kernel_sizes) * self.filters_per_cnn

    @classmethod
    def for_hidden(cls, hidden_dim: int) -> "CharFeatureConfig":
        """Configuration whose output matches an encoder of ``hidden_dim``."""
        return cls(output_dim=hidden_dim)


class PatternFeatureConfig(BaseModel):
    """Pattern CNN + BiLSTM hyperparameters."""

    model_config = ConfigDict(frozen=True)

    kernel_sizes: tuple[int, ...] = (1, 2, 3)
    filters_per_cnn: int = Field(default=16, ge=1)
    embedding_dim: int = Field(default=50, ge=1)
    lstm_hidden: int = Field(default=256, ge=1)

    @property
    def concat_width(self) -> int:
        return len(self.kernel_sizes) * self.filters_per_cnn

    @property
    def output_dim(self) -> int:
        """Width of the bidirectional output."""
        return 2 * self.lstm_hidden

    @classmethod
    def for_hidden(cls, hidden_dim: int) -> "PatternFeatureConfig":
        """Configuration whose output width equals ``hidden_dim``.

        At width 768 the LSTM keeps its default 256 units.
        """
        if hidden_dim == 768:
            return cls()
        return cls(lstm_hidden=hidden_dim // 2)


class CharCnn(nn.Module):
    """Embedding followed by parallel same-padded CNNs, each max-pooled."""

    def __init__(
        self,
        num_symbols: int,
        embedding_dim: int,
        kernel_sizes: Sequence[int],
        filters: int,
    ) -> None:
        super().__init__()
        self.embedding = nn.Embedding(num_symbols, embedding_dim, padding_idx=PAD_CHAR_ID)
        self.convs = nn.ModuleList(
            nn.Conv1d(embedding_dim, filters, kernel_size) for kernel_size in kernel_sizes
        )

    def forward(self, ids: Tensor, lengths: Tensor) -> Tensor:
        """Pool each string to a fixed-width vector.

        Args:
            ids: ``[strings, chars]`` character ids
            lengths: ``[strings]`` valid lengths

        Returns:
            ``[strings, len(kernel_sizes) * filters]``
        """
        embedded = layers.embedding(ids, self.embedding.weight).transpose(1, 2)
        pooled = [
            layers.maxpool_over_time(layers.conv1d(embedded, conv.weight, conv.bias), lengths)
            for conv in self.convs
        ]
        return torch.cat(pooled, dim=-1)


class CharFeatureExtractor(nn.Module):
    """Per-subtoken character representation (context independent)."""

    def __init__(self, config: CharFeatureConfig, index: CharIndex) -> None:
        super().__init__()
        self.config = config
        self.index = index
        self.cnn = CharCnn(
            len(index), config.embedding_dim, config.kernel_sizes, config.filters_per_cnn
        )
        self.projection = nn.Linear(config.concat_width, config.output_dim)

    def forward(self, ids: Tensor, lengths: Tensor) -> Tensor:
        """Featurize a batch of sequences.

        Args:
            ids: ``[batch, length, chars]``
            lengths: ``[batch, length]``

        Returns:
            ``[batch, length, output_dim]``
        """
        batch, length, chars = ids.shape
        pooled = self.cnn(ids.reshape(batch * length, chars), lengths.reshape(-1))
        projected = layers.relu(
            layers.affine(pooled, self.projection.weight, self.projection.bias)
        )
        return projected.reshape(batch, length, self.config.output_dim)

    def featurize(self, rows: Sequence[Sequence[str]]) -> Tensor:
        """Featurize subtoken strings (``##`` markers are not characters)."""
        stripped = [[_strip_continuation(token) for token in row] for row in rows]
        ids, lengths = character_ids(stripped, self.index)
        return self(ids, lengths)


class PatternFeatureExtractor(nn.Module):
    """Contextual pattern representation: pattern CNNs then a BiLSTM."""

    def __init__(self, config: PatternFeatureConfig, index: CharIndex) -> None:
        super().__init__()
        self.config = config
        self.index = index
        self.cnn = CharCnn(
            len(index), config.embedding_dim, config.kernel_sizes, config.filters_per_cnn
        )
        self.lstm = nn.LSTM(
            config.concat_width,
            config.lstm_hidden,
            batch_first=True,
            bidirectional=True,
        )

    def forward(self, ids: Tensor, lengths: Tensor, sequence_lengths: Tensor) -> Tensor:
        """Featurize a batch of pattern sequences.

        Args:
            ids: ``[batch, length, chars]`` pattern character ids
            lengths: ``[batch, length]`` pattern lengths
            sequence_lengths: ``[batch]`` number of real positions per row

        Returns:
            ``[batch, length, 2 * lstm_hidden]``
        """
        batch, length, chars = ids.shape
        pooled = self.cnn(ids.reshape(batch * length, chars), lengths.reshape(-1))
        per_token = pooled.reshape(batch, length, self.config.concat_width)
        return layers.bilstm(per_token, sequence_lengths, self.lstm)

    def featurize_patterns(self, rows: Sequence[Sequence[str]]) -> Tensor:
        """Featurize sequences of pattern strings."""
        ids, lengths = character_ids(rows, self.index)
        sequence_lengths = torch.tensor([max(len(row), 1) for row in rows], dtype=torch.long)
        return self(ids, lengths, sequence_lengths)

    def featurize(self, rows: Sequence[Sequence[str]]) -> Tensor:
        """Featurize subtoken strings through their patterns."""
        return self.featurize_patterns([pattern_sequence(row) for row in rows])


def char_feature_forward(subtoken: str, extractor: CharFeatureExtractor) -> Tensor:
    """Character representation of a single subtoken.

    Args:
        subtoken: Non-empty subtoken
        extractor: Character feature extractor

    Returns:
        Vector of size ``extractor.config.output_dim``

    Raises:
        FeatureError: If the subtoken is empty
    """
    if not subtoken:
        raise FeatureError("cannot featurize an empty subtoken")
    return extractor.featurize([[subtoken]])[0, 0]


def pattern_feature_forward(
    patterns: Sequence[str], extractor: PatternFeatureExtractor
) -> Tensor:
    """Pattern representation of every position of one sequence.

    Args:
        patterns: Non-empty sequence of pattern strings (see
            :func:`pattern_sequence`)
        extractor: Pattern feature extractor

    Returns:
        Matrix of shape ``[len(patterns), 2 * lstm_hidden]``

    Raises:
        FeatureError: If the sequence is empty
    """
    if not patterns:
        raise FeatureError("cannot featurize an empty sequence")
    return extractor.featurize_patterns([list(patterns)])[0]
