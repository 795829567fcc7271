"""Tests for saving and loading task models."""

from pathlib import Path

import pytest
import torch

from splitner.corpus import Dataset
from splitner.corpus import Mention
from splitner.corpus import Sentence
from splitner.corpus import TagSet
from splitner.exceptions import CheckpointError
from splitner.exceptions import ModelMismatchError
from splitner.models.classifier import ClassifierModel
from splitner.models.classifier import classify_span
from splitner.models.detector import DetectorModel
from splitner.models.detector import Framing
from splitner.models.detector import detector_forward
from splitner.models.encoder import EncoderConfig
from splitner.models.persistence import load_classifier
from splitner.models.persistence import load_detector
from splitner.models.persistence import load_model
from splitner.models.persistence import meta_path
from splitner.models.persistence import read_metadata
from splitner.models.persistence import save_model
from splitner.models.persistence import saved_variant
from splitner.models.persistence import vocab_path
from splitner.subword import Vocab


def test_detector_round_trip(
    tiny_vocab: Vocab,
    small_encoder: EncoderConfig,
    tiny_dataset: Dataset,
    emily: Sentence,
    temp_dir: Path,
) -> None:
    """Test that a reloaded detector is identical and predicts identically."""
    model = DetectorModel(
        tiny_vocab,
        TagSet.typed(tiny_dataset.type_inventory),
        small_encoder,
        framing=Framing.SEQTAG,
        question="",
        entity_types=tiny_dataset.type_inventory,
        use_pattern=False,
        seed=11,
    )
    path = temp_dir / "detector.ckpt"

    save_model(model, path, variant="single_seqtag")
    loaded = load_detector(path)

    assert meta_path(path).exists()
    assert vocab_path(path).exists()
    assert not loaded.training
    assert loaded.framing is Framing.SEQTAG
    assert loaded.question == ""
    assert loaded.tagset.labels == model.tagset.labels
    assert loaded.entity_types == model.entity_types
    assert loaded.pattern_features is None
    assert loaded.seed == 11
    for a, b in zip(model.state_dict().values(), loaded.state_dict().values()):
        assert torch.equal(a, b)
    item = model.build_input(emily, None)
    assert torch.equal(detector_forward(item, model), detector_forward(item, loaded))
    assert saved_variant(path) == "single_seqtag"


def test_classifier_round_trip(
    tiny_vocab: Vocab, small_encoder: EncoderConfig, emily: Sentence, temp_dir: Path
) -> None:
    """Test classifier settings and outputs survive a round trip."""
    model = ClassifierModel(
        tiny_vocab, ("LOC", "PER"), small_encoder, loss="cross_entropy", gamma=2.0, seed=3
    )
    path = temp_dir / "classifier.ckpt"

    save_model(model, path)
    loaded = load_classifier(path)

    assert loaded.entity_types == ("LOC", "PER")
    assert loaded.loss == "cross_entropy"
    assert loaded.gamma == 2.0
    assert torch.equal(
        classify_span(emily, Mention(3, 4), model)[1],
        classify_span(emily, Mention(3, 4), loaded)[1],
    )
    assert saved_variant(path) == ""


def test_metadata_format(
    tiny_vocab: Vocab, small_encoder: EncoderConfig, temp_dir: Path
) -> None:
    """Test the key = value sidecar."""
    path = temp_dir / "classifier.ckpt"
    save_model(ClassifierModel(tiny_vocab, ("LOC", "PER"), small_encoder), path)

    text = meta_path(path).read_text(encoding="utf-8")
    meta = read_metadata(meta_path(path))

    assert "kind = classifier\n" in text
    assert meta["entity_types"] == "LOC,PER"
    assert meta["lowercase"] == "false"


def test_load_wrong_kind(
    tiny_vocab: Vocab, small_encoder: EncoderConfig, temp_dir: Path
) -> None:
    """Test that a classifier cannot be loaded as a detector."""
    path = temp_dir / "classifier.ckpt"
    save_model(ClassifierModel(tiny_vocab, ("LOC",), small_encoder), path)

    with pytest.raises(ModelMismatchError):
        load_detector(path)


def test_load_without_metadata(temp_dir: Path) -> None:
    """Test that the sidecar is required."""
    with pytest.raises(CheckpointError, match="metadata"):
        load_model(temp_dir / "detector.ckpt")


def test_seed_mismatch_is_detected(
    tiny_vocab: Vocab, small_encoder: EncoderConfig, temp_dir: Path
) -> None:
    """Test that checkpoint and metadata must agree on the seed."""
    path = temp_dir / "classifier.ckpt"
    save_model(ClassifierModel(tiny_vocab, ("LOC",), small_encoder, seed=2), path)
    meta = meta_path(path)
    meta.write_text(
        meta.read_text(encoding="utf-8").replace("seed = 2\n", "seed = 9\n"), encoding="utf-8"
    )

    with pytest.raises(CheckpointError, match="seed"):
        load_model(path)


def test_architecture_mismatch_is_detected(
    tiny_vocab: Vocab, small_encoder: EncoderConfig, temp_dir: Path
) -> None:
    """Test that parameters must fit the described model."""
    path = temp_dir / "classifier.ckpt"
    save_model(ClassifierModel(tiny_vocab, ("LOC",), small_encoder), path)
    meta = meta_path(path)
    meta.write_text(
        meta.read_text(encoding="utf-8").replace("entity_types = LOC\n", "entity_types = LOC,PER\n"),
        encoding="utf-8",
    )

    with pytest.raises(CheckpointError, match="shape mismatch"):
        load_model(path)


def test_type_names_with_commas_are_refused(
    tiny_vocab: Vocab, small_encoder: EncoderConfig, temp_dir: Path
) -> None:
    """Test that list metadata stays parseable."""
    model = ClassifierModel(tiny_vocab, ("A,B",), small_encoder)

    with pytest.raises(CheckpointError, match="commas"):
        save_model(model, temp_dir / "classifier.ckpt")


def test_resave_is_byte_identical(
    tiny_vocab: Vocab, small_encoder: EncoderConfig, tiny_dataset: Dataset, temp_dir: Path
) -> None:
    """Test that save, load and save again reproduces every file."""
    model = DetectorModel(
        tiny_vocab, TagSet.untyped(), small_encoder, entity_types=tiny_dataset.type_inventory
    )
    first = temp_dir / "a" / "detector.ckpt"
    second = temp_dir / "b" / "detector.ckpt"

    save_model(model, first, variant="split_qa_qa")
    save_model(load_detector(first), second, variant="split_qa_qa")

    for path_of in (lambda p: p, meta_path, vocab_path):
        assert path_of(first).read_bytes() == path_of(second).read_bytes()
