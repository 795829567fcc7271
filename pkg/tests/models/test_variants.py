"""Tests for the variant registry and the single-model decoders."""

import pytest

from splitner.config import RunConfig
from splitner.corpus import Dataset
from splitner.corpus import Mention
from splitner.corpus import Sentence
from splitner.exceptions import ConfigurationError
from splitner.models.base import ScoredMention
from splitner.models.detector import Framing
from splitner.models.variants import Variant
from splitner.models.variants import VariantRegistry
from splitner.models.variants import encoder_config_for
from splitner.models.variants import resolve_overlaps
from splitner.models.variants import single_qa_variant
from splitner.models.variants import single_seqtag_variant
from splitner.subword import Vocab


def test_registry_singleton() -> None:
    """Test that registry returns the same instance."""
    registry1 = VariantRegistry.get_instance()
    registry2 = VariantRegistry.get_instance()

    assert registry1 is registry2


def test_registry_has_builtin_variants() -> None:
    """Test that every variant is registered."""
    registry = VariantRegistry.get_instance()

    for variant in Variant:
        assert registry.is_registered(variant)
    assert registry.is_registered("split_seqtag_qa")
    assert not registry.is_registered("bogus")


def test_get_available_variants() -> None:
    """Test getting the list of variants with descriptions."""
    variants = VariantRegistry.get_instance().get_available_variants()

    assert len(variants) >= 5
    assert any(v["variant"] == "single_qa" for v in variants)
    assert all(v["description"] for v in variants)


def test_get_spec_unknown_variant() -> None:
    """Test that unknown variants are configuration errors."""
    with pytest.raises(ConfigurationError, match="bogus"):
        VariantRegistry.get_instance().get_spec("bogus")


def test_encoder_config_for(small_run_config: RunConfig) -> None:
    """Test the encoder sizes taken from a run configuration."""
    encoder = encoder_config_for(small_run_config)

    assert encoder.hidden_dim == 16
    assert encoder.heads == 2
    assert encoder.max_seq_len == 64


@pytest.mark.parametrize(
    ("variant", "framing", "typed", "features", "split"),
    [
        (Variant.SPLIT_QA_QA, Framing.QA, False, True, True),
        (Variant.SPLIT_QA_NOCHARPATTERN_QA, Framing.QA, False, False, True),
        (Variant.SPLIT_SEQTAG_QA, Framing.SEQTAG, False, True, True),
        (Variant.SINGLE_QA, Framing.TYPE_QA, False, True, False),
        (Variant.SINGLE_SEQTAG, Framing.SEQTAG, True, True, False),
    ],
)
def test_build_models(
    variant: Variant,
    framing: Framing,
    typed: bool,
    features: bool,
    split: bool,
    tiny_dataset: Dataset,
    tiny_vocab: Vocab,
    small_run_config: RunConfig,
) -> None:
    """Test the models each variant assembles."""
    bundle = VariantRegistry.get_instance().build_models(
        variant, tiny_dataset, tiny_vocab, small_run_config
    )

    assert bundle.variant is variant
    assert bundle.detector.framing is framing
    assert bundle.detector.tagset.is_typed is typed
    assert (bundle.detector.char_features is not None) is features
    assert (bundle.detector.pattern_features is not None) is features
    assert bundle.is_split is split
    assert bundle.detector.seed == small_run_config.seed
    if bundle.classifier is not None:
        assert bundle.classifier.seed == small_run_config.seed + 1
        assert bundle.classifier.entity_types == tiny_dataset.type_inventory
    if typed:
        assert len(bundle.detector.tagset) == 3 * 4 + 1


def test_feature_flags_follow_config(
    tiny_dataset: Dataset, tiny_vocab: Vocab, small_run_config: RunConfig
) -> None:
    """Test that a single key flip removes one extractor."""
    config = small_run_config.with_overrides(char_feature=False)

    detector = VariantRegistry.get_instance().build_detector(
        "split_qa_qa", tiny_dataset, tiny_vocab, config
    )

    assert detector.char_features is None
    assert detector.pattern_features is not None


def test_resolve_overlaps_prefers_long_then_early_then_type_order() -> None:
    """Test the greedy overlap resolution."""
    candidates = [
        ScoredMention(Mention(1, 1, "PER"), 0.9),
        ScoredMention(Mention(0, 1, "LOC"), 0.2),
        ScoredMention(Mention(3, 3, "PER"), 0.9),
        ScoredMention(Mention(3, 3, "ORG"), 0.1),
    ]

    kept = resolve_overlaps(candidates, ["LOC", "NUM", "ORG", "PER"])

    assert [item.mention for item in kept] == [Mention(0, 1, "LOC"), Mention(3, 3, "ORG")]


def test_single_qa_variant(
    tiny_dataset: Dataset, tiny_vocab: Vocab, small_run_config: RunConfig, emily: Sentence
) -> None:
    """Test typed, disjoint output of the per-type question model."""
    registry = VariantRegistry.get_instance()
    detector = registry.build_detector("single_qa", tiny_dataset, tiny_vocab, small_run_config)

    mentions = single_qa_variant(emily, tiny_dataset.type_inventory, detector)

    for mention in mentions:
        assert mention.entity_type in tiny_dataset.type_inventory
    for first, second in zip(mentions, mentions[1:]):
        assert first.end < second.start
    with pytest.raises(ConfigurationError, match="differs"):
        single_qa_variant(emily, ["PER"], detector)


def test_single_qa_variant_needs_type_framing(
    tiny_dataset: Dataset, tiny_vocab: Vocab, small_run_config: RunConfig, emily: Sentence
) -> None:
    """Test that other detectors are refused."""
    detector = VariantRegistry.get_instance().build_detector(
        "split_qa_qa", tiny_dataset, tiny_vocab, small_run_config
    )

    with pytest.raises(ConfigurationError):
        single_qa_variant(emily, tiny_dataset.type_inventory, detector)
    with pytest.raises(ConfigurationError):
        single_seqtag_variant(emily, detector)


def test_single_seqtag_variant(
    tiny_dataset: Dataset, tiny_vocab: Vocab, small_run_config: RunConfig, emily: Sentence
) -> None:
    """Test typed output of the typed sequence tagger."""
    detector = VariantRegistry.get_instance().build_detector(
        "single_seqtag", tiny_dataset, tiny_vocab, small_run_config
    )

    mentions = single_seqtag_variant(emily, detector)

    assert mentions == sorted(mentions)
    for mention in mentions:
        assert mention.entity_type in tiny_dataset.type_inventory
