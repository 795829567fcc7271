"""Registry of the five model variants and the single-model decoders."""

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

from splitner.config import RunConfig
from splitner.corpus import Dataset
from splitner.corpus import Mention
from splitner.corpus import Sentence
from splitner.corpus import TagSet
from splitner.exceptions import ConfigurationError
from splitner.models.base import ScoredMention
from splitner.models.classifier import ClassifierModel
from splitner.models.detector import DetectorModel
from splitner.models.detector import Framing
from splitner.models.detector import detect_scored_spans
from splitner.models.encoder import EncoderConfig
from splitner.subword import Vocab

logger = logging.getLogger(__name__)


class Variant(str, Enum):
    """Model families that can be trained and compared."""

    SPLIT_QA_QA = "split_qa_qa"
    SPLIT_QA_NOCHARPATTERN_QA = "split_qa_nocharpattern_qa"
    SPLIT_SEQTAG_QA = "split_seqtag_qa"
    SINGLE_QA = "single_qa"
    SINGLE_SEQTAG = "single_seqtag"


@dataclass(frozen=True)
class VariantSpec:
    """How a variant assembles its models.

    Attributes:
        framing: Input framing of the detector
        typed_detector: Detector emits typed tags (3T + 1 symbols)
        use_features: Character and pattern features follow the run
            configuration; when False both are disabled
        needs_classifier: A span classifier types the detected spans
    """

    framing: Framing
    typed_detector: bool
    use_features: bool
    needs_classifier: bool


@dataclass
class ModelBundle:
    """Models of one variant."""

    variant: Variant
    detector: DetectorModel
    classifier: ClassifierModel | None = None

    @property
    def is_split(self) -> bool:
        """Whether spans are typed by a separate classifier."""
        return self.classifier is not None


def encoder_config_for(config: RunConfig) -> EncoderConfig:
    """Encoder sizes of a run."""
    return EncoderConfig(
        layers=config.encoder_layers,
        heads=config.encoder_heads,
        hidden_dim=config.encoder_hidden,
        ff_dim=config.encoder_ff,
        max_seq_len=config.max_seq_len,
        dropout=config.dropout,
    )


class VariantRegistry:
    """Registry for available model variants.

    This singleton maps variant names to the specs that build their models.
    """

    _instance: "VariantRegistry | None" = None

    def __init__(self) -> None:
        """Initialize the registry."""
        self._specs: dict[Variant, VariantSpec] = {}
        self._descriptions: dict[Variant, str] = {}

    @classmethod
    def get_instance(cls) -> "VariantRegistry":
        """Get the singleton instance.

        Returns:
            Registry instance
        """
        if cls._instance is None:
            cls._instance = cls()
            cls._instance._register_builtin_variants()
        return cls._instance

    def register_variant(self, variant: Variant, spec: VariantSpec, description: str) -> None:
        """Register a variant.

        Args:
            variant: Variant name
            spec: How the variant builds its models
            description: Human-readable description
        """
        self._specs[variant] = spec
        self._descriptions[variant] = description
        logger.debug(f"Registered variant: {variant.value}")

    def get_spec(self, variant: Variant | str) -> VariantSpec:
        """Get the spec of a variant.

        Args:
            variant: Variant or its name

        Returns:
            VariantSpec

        Raises:
            ConfigurationError: If the variant is not registered
        """
        try:
            return self._specs[Variant(variant)]
        except (ValueError, KeyError):
            raise ConfigurationError(f"Unknown variant: {variant}") from None

    def get_available_variants(self) -> list[dict[str, str]]:
        """List registered variants with their descriptions."""
        return [
            {"variant": variant.value, "description": self._descriptions[variant]}
            for variant in self._specs
        ]

    def is_registered(self, variant: Variant | str) -> bool:
        """Check if a variant is registered.

        Args:
            variant: Variant or its name

        Returns:
            True if registered
        """
        try:
            return Variant(variant) in self._specs
        except ValueError:
            return False

    def build_detector(
        self, variant: Variant | str, dataset: Dataset, vocab: Vocab, config: RunConfig
    ) -> DetectorModel:
        """Initialize the detector of a variant for a training dataset.

        Args:
            variant: Variant or its name
            dataset: Training dataset (its type inventory sizes the heads)
            vocab: Subword vocabulary
            config: Run configuration

        Returns:
            Freshly initialized DetectorModel
        """
        spec = self.get_spec(variant)
        types = dataset.type_inventory
        tagset = TagSet.typed(types) if spec.typed_detector else TagSet.untyped()
        return DetectorModel(
            vocab,
            tagset,
            encoder_config_for(config),
            framing=spec.framing,
            question=config.question_text,
            entity_types=types,
            use_char=spec.use_features and config.char_feature,
            use_pattern=spec.use_features and config.pattern_feature,
            lowercase=config.lowercase,
            seed=config.seed,
        )

    def build_classifier(
        self, variant: Variant | str, dataset: Dataset, vocab: Vocab, config: RunConfig
    ) -> ClassifierModel | None:
        """Initialize the span classifier of a variant, if it has one.

        Args:
            variant: Variant or its name
            dataset: Training dataset
            vocab: Subword vocabulary
            config: Run configuration

        Returns:
            Freshly initialized ClassifierModel, or None for single models
        """
        if not self.get_spec(variant).needs_classifier:
            return None
        return ClassifierModel(
            vocab,
            dataset.type_inventory,
            encoder_config_for(config),
            loss=config.classifier_loss,
            gamma=config.gamma,
            lowercase=config.lowercase,
            seed=config.seed + 1,
        )

    def build_models(
        self, variant: Variant | str, dataset: Dataset, vocab: Vocab, config: RunConfig
    ) -> ModelBundle:
        """Initialize every model of a variant.

        Args:
            variant: Variant or its name
            dataset: Training dataset
            vocab: Subword vocabulary
            config: Run configuration

        Returns:
            ModelBundle
        """
        return ModelBundle(
            variant=Variant(variant),
            detector=self.build_detector(variant, dataset, vocab, config),
            classifier=self.build_classifier(variant, dataset, vocab, config),
        )

    def _register_builtin_variants(self) -> None:
        """Register built-in variants."""
        self.register_variant(
            Variant.SPLIT_QA_QA,
            VariantSpec(Framing.QA, typed_detector=False, use_features=True, needs_classifier=True),
            "QA span detection with character and pattern features, then QA span classification",
        )
        self.register_variant(
            Variant.SPLIT_QA_NOCHARPATTERN_QA,
            VariantSpec(Framing.QA, typed_detector=False, use_features=False, needs_classifier=True),
            "QA span detection without character and pattern features, then QA span classification",
        )
        self.register_variant(
            Variant.SPLIT_SEQTAG_QA,
            VariantSpec(
                Framing.SEQTAG, typed_detector=False, use_features=True, needs_classifier=True
            ),
            "Untyped sequence tagging for detection, then QA span classification",
        )
        self.register_variant(
            Variant.SINGLE_QA,
            VariantSpec(
                Framing.TYPE_QA, typed_detector=False, use_features=True, needs_classifier=False
            ),
            "One QA tagging query per sentence and entity type",
        )
        self.register_variant(
            Variant.SINGLE_SEQTAG,
            VariantSpec(
                Framing.SEQTAG, typed_detector=True, use_features=True, needs_classifier=False
            ),
            "Typed BIOE sequence tagging in a single model",
        )


def resolve_overlaps(
    candidates: Sequence[ScoredMention], type_order: Sequence[str]
) -> list[ScoredMention]:
    """Keep a non-overlapping subset of typed candidates.

    Candidates are accepted greedily: longer spans first, then the earlier
    start, then the lower index in ``type_order``.

    Args:
        candidates: Possibly overlapping mentions
        type_order: Type inventory order

    Returns:
        Accepted mentions sorted by start
    """
    rank = {entity_type: i for i, entity_type in enumerate(type_order)}

    def key(item: ScoredMention) -> tuple[int, int, int]:
        mention = item.mention
        return (-mention.length, mention.start, rank.get(mention.entity_type, len(rank)))

    accepted: list[ScoredMention] = []
    for item in sorted(candidates, key=key):
        if not any(item.mention.overlaps(kept.mention) for kept in accepted):
            accepted.append(item)
    return sorted(accepted, key=lambda item: item.mention)


def predict_single(
    sentences: Sequence[Sentence], model: DetectorModel, batch_size: int = 16
) -> list[list[ScoredMention]]:
    """Typed mentions of a single-model variant for many sentences.

    Args:
        sentences: Sentences to tag
        model: Detector of a single-model variant (TYPE_QA or typed SEQTAG)
        batch_size: Inputs per forward pass

    Returns:
        Non-overlapping typed mentions per sentence
    """
    detected = detect_scored_spans(sentences, model, batch_size=batch_size)
    if model.framing is Framing.TYPE_QA:
        return [resolve_overlaps(spans, model.entity_types) for spans in detected]
    return detected


def single_qa_variant(
    sentence: Sentence, type_inventory: Sequence[str], model: DetectorModel
) -> list[Mention]:
    """Typed mentions from one untyped tagging query per entity type.

    Args:
        sentence: Sentence to tag
        type_inventory: Types to query, in priority order
        model: Detector with the TYPE_QA framing

    Returns:
        Union of per-type spans with overlaps resolved
    """
    if model.framing is not Framing.TYPE_QA:
        raise ConfigurationError("single_qa_variant needs a detector with the type question framing")
    if tuple(type_inventory) != model.entity_types:
        raise ConfigurationError(
            f"type inventory {list(type_inventory)} differs from the model's "
            f"{list(model.entity_types)}"
        )
    return [item.mention for item in predict_single([sentence], model)[0]]


def single_seqtag_variant(sentence: Sentence, model: DetectorModel) -> list[Mention]:
    """Typed mentions decoded from a typed sequence tagger.

    Args:
        sentence: Sentence to tag
        model: Detector with a typed tag set and the SEQTAG framing

    Returns:
        Typed mentions sorted by start
    """
    if not model.tagset.is_typed:
        raise ConfigurationError("single_seqtag_variant needs a typed tag set")
    return [item.mention for item in predict_single([sentence], model)[0]]
