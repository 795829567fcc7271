"""Model inputs: question/sentence layouts and post-padded batches.

Every input is laid out as ``[CLS] question [SEP] sentence [SEP]``; sequence
tagging inputs omit the question segment (``[CLS] sentence [SEP]``). Only
sentence words are aligned; specials and question positions never carry
loss.
"""

import logging
import re
from collections.abc import Sequence
from dataclasses import dataclass

import torch
from torch import Tensor

from splitner.config import DEFAULT_QUESTION
from splitner.corpus import Mention
from splitner.corpus import Sentence
from splitner.corpus import TagSequence
from splitner.corpus import TagSet
from splitner.corpus import check_span
from splitner.exceptions import ConfigurationError
from splitner.subword import CLS
from splitner.subword import SEP
from splitner.subword import SubtokenAlignment
from splitner.subword import Vocab
from splitner.subword import align_labels
from splitner.subword import align_words
from splitner.subword import surface_pieces
from splitner.subword import surface_subtokens
from splitner.subword import tokenize_word

logger = logging.getLogger(__name__)

CLASSIFICATION_TEMPLATE = "What is {mention}?"
TYPE_QUESTION_TEMPLATE = "Where is the {entity_type} mentioned in the text?"
QUESTION_VARIANTS = (
    DEFAULT_QUESTION,
    "Where is the entity mentioned in the text?",
    "Find named entities in the following text.",
    "",
)

QUESTION_SEGMENT = 0
SENTENCE_SEGMENT = 1

_QUESTION_WORD = re.compile(r"\w+|[^\w\s]")


def question_words(question: str) -> list[str]:
    """Split a question into words, detaching punctuation."""
    return _QUESTION_WORD.findall(question)


def type_question(entity_type: str) -> str:
    """Per-type question of the single-model QA baseline."""
    return TYPE_QUESTION_TEMPLATE.format(entity_type=entity_type.lower())


def classification_question(sentence: Sentence, mention: Mention) -> str:
    """``What is <mention text>?``"""
    return CLASSIFICATION_TEMPLATE.format(mention=sentence.span_text(mention))


def reserved_question_text(types: Sequence[str] = ()) -> list[str]:
    """Question text every vocabulary should cover."""
    texts = [*QUESTION_VARIANTS, CLASSIFICATION_TEMPLATE.format(mention="")]
    texts.extend(type_question(entity_type) for entity_type in types)
    return [" ".join(question_words(text)) for text in texts]


@dataclass(frozen=True)
class ModelInput:
    """One encoder input before padding."""

    subtokens: tuple[str, ...]
    input_ids: tuple[int, ...]
    segment_ids: tuple[int, ...]
    loss_mask: tuple[bool, ...]
    alignment: SubtokenAlignment
    labels: tuple[int, ...] | None = None
    target: int | None = None
    truncated: bool = False
    sentence_id: str = ""
    surfaces: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        """Check that parallel fields agree."""
        n = len(self.subtokens)
        lengths = {len(self.input_ids), len(self.segment_ids), len(self.loss_mask)}
        if lengths != {n} or len(self.alignment.subtokens) != n:
            raise ValueError("model input fields differ in length")
        if self.labels is not None and len(self.labels) != n:
            raise ValueError("labels differ in length from the input")
        if self.surfaces and len(self.surfaces) != n:
            raise ValueError("surfaces differ in length from the input")

    @property
    def attention_mask(self) -> tuple[bool, ...]:
        """True at every real (unpadded) position."""
        return (True,) * len(self.subtokens)

    def __len__(self) -> int:
        return len(self.subtokens)


def _layout(
    sentence: Sentence,
    question: str | None,
    vocab: Vocab,
    max_seq_len: int,
    lowercase: bool,
) -> tuple[list[str], list[int], SubtokenAlignment, bool, tuple[str, ...]]:
    prefix = [CLS]
    prefix_surfaces = [CLS]
    if question is not None:
        for word in question_words(question):
            pieces = tokenize_word(word, vocab, lowercase)
            prefix.extend(pieces)
            prefix_surfaces.extend(surface_pieces(word, pieces))
        prefix.append(SEP)
        prefix_surfaces.append(SEP)
    budget = max_seq_len - len(prefix) - 1
    if budget < 1:
        raise ConfigurationError(
            f"question of {len(prefix)} subtokens leaves no room under "
            f"max_seq_len={max_seq_len}"
        )

    words = align_words(sentence.words, vocab, lowercase)
    kept = len(words.subtokens)
    truncated = kept > budget
    if truncated:
        # Cut at a word boundary so every aligned word is complete.
        kept = budget
        while kept > 0 and not words.is_first[kept]:
            kept -= 1
        logger.warning(
            f"Sentence {sentence.id} truncated to {sum(words.is_first[:kept])} of "
            f"{len(sentence)} words (max_seq_len={max_seq_len})"
        )

    subtokens = prefix + list(words.subtokens[:kept]) + [SEP]
    word_of = [None] * len(prefix) + list(words.word_of[:kept]) + [None]
    is_first = [False] * len(prefix) + list(words.is_first[:kept]) + [False]
    segments = (
        [QUESTION_SEGMENT] * len(prefix)
        if question is not None
        else [SENTENCE_SEGMENT] * len(prefix)
    )
    segments += [SENTENCE_SEGMENT] * (kept + 1)
    alignment = SubtokenAlignment(tuple(subtokens), tuple(word_of), tuple(is_first))
    surfaces = (
        *prefix_surfaces,
        *surface_subtokens(sentence.words, alignment)[len(prefix) : len(prefix) + kept],
        SEP,
    )
    return subtokens, segments, alignment, truncated, surfaces


def build_detection_input(
    sentence: Sentence,
    question: str | None,
    vocab: Vocab,
    max_seq_len: int,
    word_tags: TagSequence | None = None,
    tagset: TagSet | None = None,
    lowercase: bool = False,
) -> ModelInput:
    """Lay out a tagging input.

    Args:
        sentence: Sentence to tag
        question: Question text (may be empty); None for plain sequence
            tagging without a question segment
        vocab: Subword vocabulary
        max_seq_len: Maximum number of subtokens; the sentence is truncated
            from the right at a word boundary and the input flagged
        word_tags: Gold word-level tags for training
        tagset: Label inventory, required with ``word_tags``
        lowercase: Lowercase before tokenization

    Returns:
        ModelInput whose loss mask is true only at first subtokens of kept
        sentence words
    """
    subtokens, segments, alignment, truncated, surfaces = _layout(
        sentence, question, vocab, max_seq_len, lowercase
    )
    labels: tuple[int, ...] | None = None
    if word_tags is not None:
        if tagset is None:
            raise ConfigurationError("a tag set is required to label an input")
        kept_words = alignment.num_words
        aligned = align_labels(
            TagSequence(word_tags.tags[:kept_words], word_tags.loss_mask[:kept_words]),
            alignment,
        )
        labels = tuple(tagset.id_of(tag) for tag in aligned.tags)
        loss_mask = aligned.loss_mask
    else:
        loss_mask = alignment.is_first
    return ModelInput(
        subtokens=tuple(subtokens),
        input_ids=tuple(vocab.id_of(token) for token in subtokens),
        segment_ids=tuple(segments),
        loss_mask=tuple(loss_mask),
        alignment=alignment,
        labels=labels,
        truncated=truncated,
        sentence_id=sentence.id,
        surfaces=surfaces,
    )


def build_classification_input(
    sentence: Sentence,
    span: Mention,
    vocab: Vocab,
    max_seq_len: int,
    target: int | None = None,
    lowercase: bool = False,
) -> ModelInput:
    """Lay out ``[CLS] What is <mention>? [SEP] sentence [SEP]``.

    The pooled position is ``[CLS]`` (index 0), the only position marked in
    the loss mask.

    Args:
        sentence: Sentence containing the span
        span: Mention to classify
        vocab: Subword vocabulary
        max_seq_len: Maximum number of subtokens
        target: Gold type index for training
        lowercase: Lowercase before tokenization

    Returns:
        ModelInput

    Raises:
        InvalidSpanError: If the span is out of bounds
    """
    check_span(span, len(sentence))
    question = classification_question(sentence, span)
    subtokens, segments, alignment, truncated, surfaces = _layout(
        sentence, question, vocab, max_seq_len, lowercase
    )
    loss_mask = [False] * len(subtokens)
    loss_mask[0] = True
    return ModelInput(
        subtokens=tuple(subtokens),
        input_ids=tuple(vocab.id_of(token) for token in subtokens),
        segment_ids=tuple(segments),
        loss_mask=tuple(loss_mask),
        alignment=alignment,
        target=target,
        truncated=truncated,
        sentence_id=sentence.id,
        surfaces=surfaces,
    )


@dataclass
class Batch:
    """Post-padded tensors for a list of model inputs."""

    input_ids: Tensor
    segment_ids: Tensor
    attention_mask: Tensor
    loss_mask: Tensor
    labels: Tensor
    targets: Tensor
    lengths: Tensor
    subtokens: list[tuple[str, ...]]
    surfaces: list[tuple[str, ...]]

    def __len__(self) -> int:
        return int(self.input_ids.shape[0])


def collate(inputs: Sequence[ModelInput], pad_id: int) -> Batch:
    """Stack inputs into a post-padded batch.

    Args:
        inputs: Non-empty list of inputs
        pad_id: Vocabulary id of ``[PAD]``

    Returns:
        Batch; labels and targets default to 0 where absent
    """
    if not inputs:
        raise ValueError("cannot collate an empty batch")
    width = max(len(item) for item in inputs)
    size = len(inputs)
    input_ids = torch.full((size, width), pad_id, dtype=torch.long)
    segment_ids = torch.zeros((size, width), dtype=torch.long)
    attention_mask = torch.zeros((size, width), dtype=torch.bool)
    loss_mask = torch.zeros((size, width), dtype=torch.bool)
    labels = torch.zeros((size, width), dtype=torch.long)
    targets = torch.zeros(size, dtype=torch.long)
    for row, item in enumerate(inputs):
        n = len(item)
        input_ids[row, :n] = torch.tensor(item.input_ids, dtype=torch.long)
        segment_ids[row, :n] = torch.tensor(item.segment_ids, dtype=torch.long)
        attention_mask[row, :n] = True
        loss_mask[row, :n] = torch.tensor(item.loss_mask, dtype=torch.bool)
        if item.labels is not None:
            labels[row, :n] = torch.tensor(item.labels, dtype=torch.long)
        if item.target is not None:
            targets[row] = item.target
    return Batch(
        input_ids=input_ids,
        segment_ids=segment_ids,
        attention_mask=attention_mask,
        loss_mask=loss_mask,
        labels=labels,
        targets=targets,
        lengths=torch.tensor([len(item) for item in inputs], dtype=torch.long),
        subtokens=[item.subtokens for item in inputs],
        surfaces=[item.surfaces or item.subtokens for item in inputs],
    )
