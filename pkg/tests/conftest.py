"""Pytest configuration and shared fixtures for splitner tests."""

import logging
from collections.abc import Generator
from pathlib import Path
from tempfile import TemporaryDirectory

import pytest

import splitner.config
from splitner.config import RunConfig
from splitner.corpus import Dataset
from splitner.corpus import Mention
from splitner.corpus import Sentence
from splitner.models.encoder import EncoderConfig
from splitner.models.inputs import reserved_question_text
from splitner.subword import Vocab
from splitner.subword import build_vocab

EMILY_CONLL = (
    "Emily\tB-PER\n"
    "lives\tO\n"
    "in\tO\n"
    "United\tB-LOC\n"
    "States\tE-LOC\n"
    "\n"
    "IBM\tB-ORG\n"
    "hired\tO\n"
    "42\tB-NUM\n"
    "people\tO\n"
    "\n"
)


@pytest.fixture(autouse=True)
def reset_settings() -> Generator[None, None, None]:
    """Drop the settings singleton so environment changes never leak."""
    splitner.config._config = None
    yield
    splitner.config._config = None


@pytest.fixture(autouse=True)
def restore_logging() -> Generator[None, None, None]:
    """Undo root logger changes made by configure_logging."""
    root = logging.getLogger()
    handlers = root.handlers[:]
    level = root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


@pytest.fixture
def temp_dir() -> Generator[Path, None, None]:
    """Provide a temporary directory for test files.

    Yields:
        Path to a temporary directory that will be cleaned up after the test.
    """
    with TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def emily_conll() -> str:
    """The two example sentences as canonical BIOE CoNLL text."""
    return EMILY_CONLL


@pytest.fixture
def emily() -> Sentence:
    """The running example sentence."""
    return Sentence.from_words("0", ["Emily", "lives", "in", "United", "States"])


@pytest.fixture
def tiny_dataset(emily: Sentence) -> Dataset:
    """Two sentences covering four entity types."""
    second = Sentence.from_words("1", ["IBM", "hired", "42", "people"])
    return Dataset.build(
        [emily, second],
        {
            "0": [Mention(0, 0, "PER"), Mention(3, 4, "LOC")],
            "1": [Mention(0, 0, "ORG"), Mention(2, 2, "NUM")],
        },
    )


@pytest.fixture
def tiny_vocab(tiny_dataset: Dataset) -> Vocab:
    """Vocabulary covering the tiny dataset and every question template."""
    return build_vocab(
        tiny_dataset, 200, reserved_text=reserved_question_text(tiny_dataset.type_inventory)
    )


@pytest.fixture
def small_encoder() -> EncoderConfig:
    """Encoder small enough for fast unit tests."""
    return EncoderConfig(layers=1, heads=2, hidden_dim=16, ff_dim=32, max_seq_len=64, dropout=0.0)


@pytest.fixture
def small_run_config() -> RunConfig:
    """Run configuration matching ``small_encoder``."""
    return RunConfig(
        encoder_layers=1,
        encoder_heads=2,
        encoder_hidden=16,
        encoder_ff=32,
        max_seq_len=64,
        dropout=0.0,
        batch_size=4,
        epochs=2,
        lr=1e-3,
        seed=7,
    )
