"""Common interface of the trainable task models."""

import logging
from abc import ABCMeta
from abc import abstractmethod
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass

from torch import Tensor
from torch import nn

from splitner.corpus import Dataset
from splitner.corpus import Mention
from splitner.models.encoder import EncoderConfig
from splitner.models.encoder import TransformerEncoder
from splitner.models.inputs import Batch
from splitner.models.inputs import ModelInput
from splitner.subword import Vocab

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScoredMention:
    """A predicted mention with its confidence in [0, 1]."""

    mention: Mention
    score: float


class TaskModel(nn.Module, metaclass=ABCMeta):
    """Encoder-based model trained on one kind of input.

    Subclasses decide how a dataset turns into inputs, what the head computes
    and which objective trains it.
    """

    kind: str = ""

    def __init__(
        self,
        vocab: Vocab,
        encoder_config: EncoderConfig,
        lowercase: bool = False,
        seed: int = 0,
    ) -> None:
        """Initialize the shared encoder.

        Args:
            vocab: Subword vocabulary of every input
            encoder_config: Encoder sizes
            lowercase: Lowercase words before tokenization
            seed: Seed of parameter initialization and training
        """
        super().__init__()
        self.vocab = vocab
        self.encoder_config = encoder_config
        self.lowercase = lowercase
        self.seed = seed
        self.encoder = TransformerEncoder(encoder_config, len(vocab), vocab.pad_id)

    @property
    def max_seq_len(self) -> int:
        return self.encoder_config.max_seq_len

    def encode(self, batch: Batch) -> Tensor:
        """Encoder output ``[batch, length, hidden]``."""
        return self.encoder(batch.input_ids, batch.segment_ids, batch.attention_mask)

    @abstractmethod
    def training_inputs(self, dataset: Dataset) -> list[ModelInput]:
        """Labelled inputs of one pass over ``dataset``."""

    @abstractmethod
    def compute_loss(self, batch: Batch) -> Tensor:
        """Scalar training loss of a labelled batch."""

    def num_trainable_parameters(self) -> int:
        """Number of trainable scalars."""
        return sum(p.numel() for p in self.parameters() if p.requires_grad)


@contextmanager
def evaluating(model: nn.Module) -> Iterator[None]:
    """Switch ``model`` to inference mode for the duration of the block.

    A model that is already in inference mode is left untouched, so frozen
    models can be shared across threads.
    """
    was_training = model.training
    if was_training:
        model.eval()
    try:
        yield
    finally:
        if was_training:
            model.train()
