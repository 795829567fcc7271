"""Seeded synthetic corpora whose entity types differ by surface shape.

Each entity type is tied to a surface family (all-caps tokens, digit
strings, capitalized bigrams, ...) and mentions are embedded in lowercase
filler text. Mention density is exact: a corpus of ``n`` sentences at
density ``d`` holds ``round(d * n)`` mentions.
"""

import logging
import string
from collections.abc import Sequence
from enum import Enum

import numpy as np

from splitner.corpus import Dataset
from splitner.corpus import Mention
from splitner.corpus import Sentence
from splitner.exceptions import SyntheticSpecError

logger = logging.getLogger(__name__)

FILLER_WORDS = (
    "the", "a", "of", "and", "to", "in", "was", "is", "for", "on", "that",
    "with", "as", "at", "by", "from", "said", "after", "before", "about",
    "report", "meeting", "visit", "deal", "plan", "talks", "week", "year",
    "people", "group", "office", "team", "market", "share", "price", "city",
    "announced", "joined", "left", "opened", "signed", "met", "called",
)
MAX_FILLER_GAP = 3


class SurfaceFamily(str, Enum):
    """Shapes a synthetic mention can take."""

    ALL_CAPS = "all_caps"
    DIGITS = "digits"
    CAPITALIZED_BIGRAM = "capitalized_bigram"
    CAPITALIZED = "capitalized"
    HYPHENATED_ALNUM = "hyphenated_alnum"


def parse_type_spec(spec: str) -> list[tuple[str, SurfaceFamily]]:
    """Parse ``"ORG:all_caps,NUM:digits"`` into ordered (type, family) pairs.

    Args:
        spec: Comma-separated ``TYPE:family`` items

    Returns:
        Pairs in spec order

    Raises:
        SyntheticSpecError: On empty, malformed or duplicate items, or an
            unknown family
    """
    pairs: list[tuple[str, SurfaceFamily]] = []
    for item in spec.split(","):
        item = item.strip()
        entity_type, separator, family = item.partition(":")
        entity_type, family = entity_type.strip(), family.strip()
        if not separator or not entity_type:
            raise SyntheticSpecError(f"expected TYPE:family, got {item!r}")
        if any(c.isspace() for c in entity_type):
            raise SyntheticSpecError(f"invalid entity type {entity_type!r}")
        if any(entity_type == seen for seen, _ in pairs):
            raise SyntheticSpecError(f"duplicate entity type {entity_type!r}")
        try:
            pairs.append((entity_type, SurfaceFamily(family)))
        except ValueError:
            known = ", ".join(f.value for f in SurfaceFamily)
            raise SyntheticSpecError(
                f"unknown surface family {family!r} (known: {known})"
            ) from None
    return pairs


def _letters(rng: np.random.Generator, alphabet: str, low: int, high: int) -> str:
    length = int(rng.integers(low, high + 1))
    return "".join(alphabet[int(i)] for i in rng.integers(0, len(alphabet), size=length))


def _capitalized(rng: np.random.Generator) -> str:
    return _letters(rng, string.ascii_uppercase, 1, 1) + _letters(rng, string.ascii_lowercase, 2, 7)


def surface_form(family: SurfaceFamily, rng: np.random.Generator) -> list[str]:
    """Draw the tokens of one mention of ``family``."""
    if family is SurfaceFamily.ALL_CAPS:
        return [_letters(rng, string.ascii_uppercase, 2, 5)]
    if family is SurfaceFamily.DIGITS:
        return [_letters(rng, string.digits, 1, 4)]
    if family is SurfaceFamily.CAPITALIZED_BIGRAM:
        return [_capitalized(rng), _capitalized(rng)]
    if family is SurfaceFamily.CAPITALIZED:
        return [_capitalized(rng)]
    return [
        _letters(rng, string.ascii_lowercase, 2, 4)
        + "-"
        + _letters(rng, string.digits, 1, 3)
    ]


def mention_counts(rng: np.random.Generator, n_sentences: int, density: float) -> list[int]:
    """Per-sentence mention counts summing to ``round(density * n_sentences)``.

    Counts start as even as possible and are then jittered by moving single
    mentions between random sentence pairs, which keeps the total.
    """
    total = int(round(density * n_sentences))
    base, remainder = divmod(total, n_sentences)
    counts = np.full(n_sentences, base, dtype=np.int64)
    if remainder:
        counts[rng.choice(n_sentences, size=remainder, replace=False)] += 1
    for _ in range(n_sentences // 2):
        source, target = (int(i) for i in rng.integers(0, n_sentences, size=2))
        if source != target and counts[source] > 0:
            counts[source] -= 1
            counts[target] += 1
    return [int(count) for count in counts]


def _filler(rng: np.random.Generator, count: int) -> list[str]:
    return [FILLER_WORDS[int(i)] for i in rng.integers(0, len(FILLER_WORDS), size=count)]


def generate_synthetic_corpus(
    seed: int,
    n_sentences: int,
    type_spec: str | Sequence[tuple[str, SurfaceFamily]],
    density: float = 2.0,
) -> Dataset:
    """Generate a deterministic corpus.

    Mentions are separated by at least one filler word, so gold mentions
    never overlap or touch.

    Args:
        seed: Random seed; equal seeds give identical corpora
        n_sentences: Number of sentences (>= 1)
        type_spec: ``"TYPE:family,..."`` text or parsed pairs
        density: Mean mentions per sentence (>= 0)

    Returns:
        Dataset whose type inventory is the sorted spec types

    Raises:
        SyntheticSpecError: On an invalid spec, sentence count or density
    """
    pairs = parse_type_spec(type_spec) if isinstance(type_spec, str) else list(type_spec)
    if not pairs:
        raise SyntheticSpecError("at least one entity type is required")
    if n_sentences < 1:
        raise SyntheticSpecError(f"n_sentences must be >= 1, got {n_sentences}")
    if density < 0:
        raise SyntheticSpecError(f"density must be >= 0, got {density}")

    rng = np.random.default_rng(seed)
    counts = mention_counts(rng, n_sentences, density)
    sentences: list[Sentence] = []
    gold: dict[str, list[Mention]] = {}
    for index, count in enumerate(counts):
        words: list[str] = []
        mentions: list[Mention] = []
        if count == 0:
            words = _filler(rng, int(rng.integers(3, 11)))
        else:
            words.extend(_filler(rng, int(rng.integers(0, MAX_FILLER_GAP + 1))))
            for k in range(count):
                if k:
                    words.extend(_filler(rng, int(rng.integers(1, MAX_FILLER_GAP + 1))))
                entity_type, family = pairs[int(rng.integers(0, len(pairs)))]
                tokens = surface_form(family, rng)
                mentions.append(Mention(len(words), len(words) + len(tokens) - 1, entity_type))
                words.extend(tokens)
            words.extend(_filler(rng, int(rng.integers(1, MAX_FILLER_GAP + 1))))
        sentence = Sentence.from_words(str(index), words)
        sentences.append(sentence)
        gold[sentence.id] = mentions

    dataset = Dataset.build(sentences, gold, sorted(entity_type for entity_type, _ in pairs))
    logger.info(
        f"Generated synthetic corpus: {len(dataset)} sentences, "
        f"{dataset.num_mentions} mentions, {len(pairs)} types (seed {seed})"
    )
    return dataset
