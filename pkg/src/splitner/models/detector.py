"""Span detection: a token tagger over encoder, character and pattern features.

The detector tags every subtoken with a BIOE symbol. The tag set is untyped
(``O, B, I, E``) for span detection and typed (``3T + 1`` symbols) for the
single-model sequence tagger. Its input framing decides the question:

* ``QA``: one fixed question per sentence;
* ``SEQTAG``: no question segment at all;
* ``TYPE_QA``: one question per entity type, naming the type.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

import torch
from torch import Tensor
from torch import nn

from splitner.config import DEFAULT_QUESTION
from splitner.corpus import OUTSIDE
from splitner.corpus import UNTYPED
from splitner.corpus import Dataset
from splitner.corpus import Mention
from splitner.corpus import Sentence
from splitner.corpus import TagSequence
from splitner.corpus import TagSet
from splitner.corpus import decode_tags
from splitner.corpus import encode_tags
from splitner.features import CharFeatureConfig
from splitner.features import CharFeatureExtractor
from splitner.features import CharIndex
from splitner.features import PatternFeatureConfig
from splitner.features import PatternFeatureExtractor
from splitner.models.base import ScoredMention
from splitner.models.base import TaskModel
from splitner.models.base import evaluating
from splitner.models.encoder import EncoderConfig
from splitner.models.inputs import Batch
from splitner.models.inputs import ModelInput
from splitner.models.inputs import build_detection_input
from splitner.models.inputs import collate
from splitner.models.inputs import type_question
from splitner.nn import cross_entropy
from splitner.nn import initialize_parameters
from splitner.nn import layers
from splitner.subword import Vocab
from splitner.subword import first_subtoken_values

logger = logging.getLogger(__name__)


class Framing(str, Enum):
    """How a detector phrases its inputs."""

    QA = "qa"
    SEQTAG = "seqtag"
    TYPE_QA = "type_qa"


@dataclass(frozen=True)
class WordTagging:
    """Word-level argmax tags of one input with their probabilities."""

    tags: TagSequence
    confidences: tuple[float, ...]

    def spans(self, entity_type: str = UNTYPED) -> list[ScoredMention]:
        """Decode the tags; each span scores the mean confidence of its words.

        Args:
            entity_type: Type to stamp on every decoded span (untyped tags)

        Returns:
            Scored mentions sorted by start
        """
        scored = []
        for mention in decode_tags(self.tags):
            if entity_type:
                mention = mention.with_type(entity_type)
            window = self.confidences[mention.start : mention.end + 1]
            scored.append(ScoredMention(mention, sum(window) / len(window)))
        return scored


class DetectorModel(TaskModel):
    """Tagging head over ``encoder | char features | pattern features``."""

    kind = "detector"

    def __init__(
        self,
        vocab: Vocab,
        tagset: TagSet,
        encoder_config: EncoderConfig,
        framing: Framing = Framing.QA,
        question: str = DEFAULT_QUESTION,
        entity_types: Sequence[str] = (),
        use_char: bool = True,
        use_pattern: bool = True,
        lowercase: bool = False,
        seed: int = 0,
    ) -> None:
        """Initialize the detector.

        Args:
            vocab: Subword vocabulary
            tagset: Output labels (untyped, or typed for sequence tagging)
            encoder_config: Encoder sizes; feature widths follow
                ``hidden_dim``
            framing: Input framing
            question: Detection question of the QA framing
            entity_types: Type inventory, required by the TYPE_QA framing
            use_char: Attach character features
            use_pattern: Attach pattern features
            lowercase: Lowercase words before tokenization
            seed: Initialization seed
        """
        super().__init__(vocab, encoder_config, lowercase, seed)
        if framing is Framing.TYPE_QA and not entity_types:
            raise ValueError("the type question framing needs an entity type inventory")
        self.tagset = tagset
        self.framing = framing
        self.question = question
        self.entity_types = tuple(entity_types)
        self.use_char = use_char
        self.use_pattern = use_pattern

        hidden = encoder_config.hidden_dim
        width = hidden
        self.char_features: CharFeatureExtractor | None = None
        self.pattern_features: PatternFeatureExtractor | None = None
        if use_char:
            self.char_features = CharFeatureExtractor(
                CharFeatureConfig.for_hidden(hidden), CharIndex.from_vocab(vocab)
            )
            width += self.char_features.config.output_dim
        if use_pattern:
            self.pattern_features = PatternFeatureExtractor(
                PatternFeatureConfig.for_hidden(hidden), CharIndex.for_patterns(vocab)
            )
            width += self.pattern_features.config.output_dim
        self.classifier = nn.Linear(width, len(tagset))
        initialize_parameters(self, seed)

    @property
    def classifier_width(self) -> int:
        """Input width of the tagging head."""
        return int(self.classifier.in_features)

    def feature_parameter_count(self) -> int:
        """Parameters that exist only because features are attached.

        Counts both feature extractors and the head columns they feed.
        """
        count = 0
        for extractor in (self.char_features, self.pattern_features):
            if extractor is not None:
                count += sum(p.numel() for p in extractor.parameters())
        extra_width = self.classifier_width - self.encoder_config.hidden_dim
        return count + extra_width * len(self.tagset)

    def forward(self, batch: Batch) -> Tensor:
        """Tag logits ``[batch, length, len(tagset)]``."""
        parts = [self.encode(batch)]
        if self.char_features is not None:
            parts.append(self.char_features.featurize(batch.subtokens))
        if self.pattern_features is not None:
            parts.append(self.pattern_features.featurize(batch.surfaces))
        features = torch.cat(parts, dim=-1)
        return layers.affine(features, self.classifier.weight, self.classifier.bias)

    def compute_loss(self, batch: Batch) -> Tensor:
        return cross_entropy(self(batch), batch.labels, batch.loss_mask)

    def queries(self, sentence: Sentence) -> list[tuple[str | None, str]]:
        """Questions asked about ``sentence`` with the type each one targets."""
        if self.framing is Framing.SEQTAG:
            return [(None, UNTYPED)]
        if self.framing is Framing.TYPE_QA:
            return [(type_question(t), t) for t in self.entity_types]
        return [(self.question, UNTYPED)]

    def build_input(
        self,
        sentence: Sentence,
        question: str | None,
        mentions: Sequence[Mention] | None = None,
    ) -> ModelInput:
        """Lay out one input, labelled when ``mentions`` is given."""
        word_tags = None
        if mentions is not None:
            word_tags = encode_tags(mentions, len(sentence), typed=self.tagset.is_typed)
        return build_detection_input(
            sentence,
            question,
            self.vocab,
            self.max_seq_len,
            word_tags=word_tags,
            tagset=self.tagset if word_tags is not None else None,
            lowercase=self.lowercase,
        )

    def training_inputs(self, dataset: Dataset) -> list[ModelInput]:
        inputs = []
        for sentence in dataset.sentences:
            gold = dataset.mentions(sentence)
            for question, entity_type in self.queries(sentence):
                if self.framing is Framing.TYPE_QA:
                    mentions = [m.untyped() for m in gold if m.entity_type == entity_type]
                elif self.tagset.is_typed:
                    mentions = list(gold)
                else:
                    mentions = [m.untyped() for m in gold]
                inputs.append(self.build_input(sentence, question, mentions))
        return inputs


def detector_forward(model_input: ModelInput, model: DetectorModel) -> Tensor:
    """Per-position tag distribution of one input.

    Args:
        model_input: Input built for this model
        model: Detector

    Returns:
        ``[len(model_input), len(tagset)]`` rows summing to 1
    """
    batch = collate([model_input], model.vocab.pad_id)
    with evaluating(model), torch.no_grad():
        logits = model(batch)
    return layers.softmax(logits[0], dim=-1)


def tag_inputs(
    model: DetectorModel,
    inputs: Sequence[ModelInput],
    sentence_lengths: Sequence[int],
) -> list[WordTagging]:
    """Argmax word tags of a batch of inputs.

    Words cut off by truncation are tagged ``O`` with confidence 1.

    Args:
        model: Detector
        inputs: Inputs built for this model
        sentence_lengths: Word count of each input's sentence

    Returns:
        One WordTagging per input
    """
    if not inputs:
        return []
    batch = collate(inputs, model.vocab.pad_id)
    with evaluating(model), torch.no_grad():
        probs = layers.softmax(model(batch), dim=-1)
    best, ids = probs.max(dim=-1)
    taggings = []
    for row, (item, n_words) in enumerate(zip(inputs, sentence_lengths)):
        width = len(item)
        tag_ids = first_subtoken_values(ids[row, :width].tolist(), item.alignment)
        confidences = first_subtoken_values(best[row, :width].tolist(), item.alignment)
        missing = n_words - len(tag_ids)
        tags = [model.tagset.tag_of(i) for i in tag_ids] + [OUTSIDE] * missing
        taggings.append(
            WordTagging(TagSequence(tuple(tags)), tuple(confidences) + (1.0,) * missing)
        )
    return taggings


def detect_scored_spans(
    sentences: Sequence[Sentence],
    model: DetectorModel,
    question: str | None = None,
    batch_size: int = 16,
) -> list[list[ScoredMention]]:
    """Detect spans in many sentences.

    Every query of the model's framing is asked; under TYPE_QA the spans
    of each query carry its type and the per-type results are concatenated
    without overlap resolution.

    Args:
        sentences: Sentences to tag
        model: Detector
        question: Override of the QA question
        batch_size: Inputs per forward pass

    Returns:
        Scored mentions per sentence, in input order
    """
    queries = []
    for index, sentence in enumerate(sentences):
        for asked, entity_type in model.queries(sentence):
            if question is not None and model.framing is Framing.QA:
                asked = question
            queries.append((index, entity_type, model.build_input(sentence, asked)))

    results: list[list[ScoredMention]] = [[] for _ in sentences]
    for start in range(0, len(queries), batch_size):
        chunk = queries[start : start + batch_size]
        taggings = tag_inputs(
            model,
            [item for _, _, item in chunk],
            [len(sentences[index]) for index, _, _ in chunk],
        )
        for (index, entity_type, _), tagging in zip(chunk, taggings):
            results[index].extend(tagging.spans(entity_type))
    return results


def detect_spans(
    sentence: Sentence, model: DetectorModel, question: str | None = None
) -> list[Mention]:
    """Untyped spans detected in one sentence.

    Args:
        sentence: Sentence to tag
        model: Detector (any framing; types are dropped)
        question: Override of the QA question

    Returns:
        Untyped mentions sorted by start
    """
    scored = detect_scored_spans([sentence], model, question)[0]
    return sorted({item.mention.untyped() for item in scored})
