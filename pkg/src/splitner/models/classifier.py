"""Span classification: ``What is <mention>?`` answered over the type inventory."""

import logging
from collections.abc import Sequence
from typing import Literal

import torch
from torch import Tensor
from torch import nn

from splitner.corpus import Dataset
from splitner.corpus import Mention
from splitner.corpus import Sentence
from splitner.exceptions import ConfigurationError
from splitner.models.base import TaskModel
from splitner.models.base import evaluating
from splitner.models.encoder import EncoderConfig
from splitner.models.inputs import Batch
from splitner.models.inputs import ModelInput
from splitner.models.inputs import build_classification_input
from splitner.models.inputs import collate
from splitner.nn import cross_entropy
from splitner.nn import dice_loss
from splitner.nn import initialize_parameters
from splitner.nn import layers
from splitner.subword import Vocab

logger = logging.getLogger(__name__)

ClassifierLoss = Literal["dice", "cross_entropy"]


class ClassifierModel(TaskModel):
    """Affine head over the pooled (``[CLS]``) representation."""

    kind = "classifier"

    def __init__(
        self,
        vocab: Vocab,
        entity_types: Sequence[str],
        encoder_config: EncoderConfig,
        loss: ClassifierLoss = "dice",
        gamma: float = 1.0,
        lowercase: bool = False,
        seed: int = 0,
    ) -> None:
        """Initialize the classifier.

        Args:
            vocab: Subword vocabulary
            entity_types: Ordered type inventory; output index i is type i
            encoder_config: Encoder sizes
            loss: Training objective
            gamma: Dice smoothing constant
            lowercase: Lowercase words before tokenization
            seed: Initialization seed
        """
        super().__init__(vocab, encoder_config, lowercase, seed)
        if not entity_types:
            raise ConfigurationError("a span classifier needs at least one entity type")
        self.entity_types = tuple(entity_types)
        self.loss = loss
        self.gamma = gamma
        self.classifier = nn.Linear(encoder_config.hidden_dim, len(self.entity_types))
        initialize_parameters(self, seed)

    def forward(self, batch: Batch) -> Tensor:
        """Type logits ``[batch, T]``."""
        pooled = self.encode(batch)[:, 0]
        return layers.affine(pooled, self.classifier.weight, self.classifier.bias)

    def compute_loss(self, batch: Batch) -> Tensor:
        logits = self(batch)
        if self.loss == "cross_entropy":
            return cross_entropy(logits, batch.targets)
        return dice_loss(layers.softmax(logits, dim=-1), batch.targets, self.gamma)

    def build_input(
        self, sentence: Sentence, span: Mention, target: int | None = None
    ) -> ModelInput:
        return build_classification_input(
            sentence,
            span.untyped(),
            self.vocab,
            self.max_seq_len,
            target=target,
            lowercase=self.lowercase,
        )

    def training_inputs(self, dataset: Dataset) -> list[ModelInput]:
        """One input per gold mention of a known type."""
        index = {entity_type: i for i, entity_type in enumerate(self.entity_types)}
        inputs = []
        skipped = 0
        for sentence in dataset.sentences:
            for mention in dataset.mentions(sentence):
                if mention.entity_type not in index:
                    skipped += 1
                    continue
                inputs.append(
                    self.build_input(sentence, mention, index[mention.entity_type])
                )
        if skipped:
            logger.warning(f"Skipped {skipped} gold mentions of types unknown to the classifier")
        return inputs


def _argmax(distribution: Sequence[float]) -> int:
    # list.index returns the first maximum: ties go to the lowest type index.
    return list(distribution).index(max(distribution))


def classify_spans(
    items: Sequence[tuple[Sentence, Mention]],
    model: ClassifierModel,
    batch_size: int = 16,
) -> list[tuple[str, Tensor]]:
    """Classify many spans.

    Args:
        items: ``(sentence, span)`` pairs
        model: Span classifier
        batch_size: Inputs per forward pass

    Returns:
        ``(type, distribution)`` per item, in input order
    """
    results: list[tuple[str, Tensor]] = []
    for start in range(0, len(items), batch_size):
        chunk = items[start : start + batch_size]
        batch = collate(
            [model.build_input(sentence, span) for sentence, span in chunk],
            model.vocab.pad_id,
        )
        with evaluating(model), torch.no_grad():
            probs = layers.softmax(model(batch), dim=-1)
        for row in probs:
            results.append((model.entity_types[_argmax(row.tolist())], row))
    return results


def classify_span(
    sentence: Sentence, span: Mention, model: ClassifierModel
) -> tuple[str, Tensor]:
    """Type of one span and the full distribution over types.

    Args:
        sentence: Sentence containing the span
        span: Span to classify
        model: Span classifier

    Returns:
        Argmax type (ties broken by lowest type index) and the T-way
        distribution

    Raises:
        InvalidSpanError: If the span is out of bounds
    """
    return classify_spans([(sentence, span)], model)[0]
