"""Sentences, mentions and tag sequences.

Holds the data model shared by every other module, the CoNLL reader and
writer, and the BIO/BIOE/BIOES codecs. Mentions use 0-based inclusive token
indices. Every type here is immutable and every function is pure.
"""

import logging
import re
from collections.abc import Iterable
from collections.abc import Mapping
from collections.abc import Sequence
from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace
from enum import Enum

from splitner.exceptions import CorpusParseError
from splitner.exceptions import InvalidSpanError
from splitner.exceptions import TagSequenceError

logger = logging.getLogger(__name__)

UNTYPED = ""
OUTSIDE = "O"
DOCSTART = "-DOCSTART-"

_INPUT_TAG = re.compile(r"^(?:O|[BIE]-\S+)$")
_WHITESPACE = re.compile(r"\s")


class TagScheme(str, Enum):
    """Span tagging schemes."""

    BIO = "bio"
    BIOE = "bioe"
    BIOES = "bioes"

    @property
    def prefixes(self) -> frozenset[str]:
        """Symbols the scheme uses besides O."""
        return {
            TagScheme.BIO: frozenset("BI"),
            TagScheme.BIOE: frozenset("BIE"),
            TagScheme.BIOES: frozenset("BIES"),
        }[self]


@dataclass(frozen=True)
class Token:
    """A whitespace-free word at a fixed position of its sentence."""

    text: str
    index: int

    def __post_init__(self) -> None:
        """Validate the token text."""
        if not self.text:
            raise ValueError(f"token {self.index} is empty")
        if _WHITESPACE.search(self.text):
            raise ValueError(f"token {self.index} contains whitespace: {self.text!r}")


@dataclass(frozen=True)
class Sentence:
    """An identified, non-empty sequence of tokens."""

    id: str
    tokens: tuple[Token, ...]

    def __post_init__(self) -> None:
        """Validate the sentence."""
        if not self.tokens:
            raise ValueError(f"sentence {self.id!r} has no tokens")

    @classmethod
    def from_words(cls, sentence_id: str, words: Sequence[str]) -> "Sentence":
        """Build a sentence from plain word strings.

        Args:
            sentence_id: Identifier of the sentence
            words: Word strings in order

        Returns:
            Sentence instance
        """
        return cls(
            id=sentence_id,
            tokens=tuple(Token(text=word, index=i) for i, word in enumerate(words)),
        )

    @property
    def words(self) -> tuple[str, ...]:
        """Token texts in order."""
        return tuple(token.text for token in self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def span_text(self, mention: "Mention") -> str:
        """Surface text of a mention, tokens joined by single spaces.

        Args:
            mention: A mention inside this sentence

        Returns:
            Mention text

        Raises:
            InvalidSpanError: If the mention is out of bounds
        """
        check_span(mention, len(self))
        return " ".join(self.words[mention.start : mention.end + 1])


@dataclass(frozen=True, order=True)
class Mention:
    """A typed or untyped span ``[start, end]`` (inclusive token indices)."""

    start: int
    end: int
    entity_type: str = UNTYPED

    @property
    def length(self) -> int:
        """Number of tokens covered."""
        return self.end - self.start + 1

    def untyped(self) -> "Mention":
        """Copy of this mention without its entity type."""
        return replace(self, entity_type=UNTYPED)

    def with_type(self, entity_type: str) -> "Mention":
        """Copy of this mention labelled with ``entity_type``."""
        return replace(self, entity_type=entity_type)

    def overlaps(self, other: "Mention") -> bool:
        """Whether two spans share at least one token."""
        return self.start <= other.end and other.start <= self.end


def check_span(mention: Mention, n: int) -> None:
    """Raise unless ``0 <= start <= end < n``.

    Args:
        mention: Mention to check
        n: Sentence length

    Raises:
        InvalidSpanError: If the span is reversed or out of bounds
    """
    if not 0 <= mention.start <= mention.end < n:
        raise InvalidSpanError(
            f"span ({mention.start},{mention.end}) invalid for sentence of length {n}"
        )


@dataclass(frozen=True)
class TagSequence:
    """Per-position tags with a parallel loss mask.

    An empty ``loss_mask`` means every position contributes to the loss.
    """

    tags: tuple[str, ...]
    loss_mask: tuple[bool, ...] = field(default=())

    def __post_init__(self) -> None:
        """Fill or validate the loss mask."""
        if not self.loss_mask and self.tags:
            object.__setattr__(self, "loss_mask", (True,) * len(self.tags))
        if len(self.loss_mask) != len(self.tags):
            raise TagSequenceError(
                f"loss mask length {len(self.loss_mask)} != tag length {len(self.tags)}"
            )

    def __len__(self) -> int:
        return len(self.tags)


def split_tag(tag: str) -> tuple[str, str]:
    """Split ``"B-PER"`` into ``("B", "PER")``; bare symbols are untyped.

    Only the first hyphen separates prefix and type, so types may contain
    hyphens themselves.
    """
    prefix, _, entity_type = tag.partition("-")
    return prefix, entity_type


def join_tag(prefix: str, entity_type: str) -> str:
    """Inverse of :func:`split_tag`."""
    if prefix == OUTSIDE or entity_type == UNTYPED:
        return prefix
    return f"{prefix}-{entity_type}"


class TagSet:
    """Ordered label inventory of a tagging head.

    ``O`` always has id 0. The untyped set is ``O, B, I, E``; the typed set
    adds ``B-t, I-t, E-t`` for every type ``t`` (3T+1 symbols).
    """

    def __init__(self, labels: Sequence[str]) -> None:
        """Initialize the tag set.

        Args:
            labels: Labels in id order, starting with O
        """
        if not labels or labels[0] != OUTSIDE:
            raise TagSequenceError("a tag set must start with O")
        if len(set(labels)) != len(labels):
            raise TagSequenceError("duplicate labels in tag set")
        self._labels = tuple(labels)
        self._index = {label: i for i, label in enumerate(self._labels)}

    @classmethod
    def untyped(cls) -> "TagSet":
        """Entity-agnostic BIOE labels."""
        return cls((OUTSIDE, "B", "I", "E"))

    @classmethod
    def typed(cls, types: Sequence[str]) -> "TagSet":
        """Typed BIOE labels for the given type inventory."""
        labels = [OUTSIDE]
        for entity_type in types:
            labels.extend(join_tag(prefix, entity_type) for prefix in "BIE")
        return cls(labels)

    @property
    def labels(self) -> tuple[str, ...]:
        """Labels in id order."""
        return self._labels

    @property
    def is_typed(self) -> bool:
        """Whether labels carry entity types."""
        return any(split_tag(label)[1] for label in self._labels)

    def id_of(self, tag: str) -> int:
        """Label id of ``tag``.

        Raises:
            TagSequenceError: If the tag is not part of the set
        """
        try:
            return self._index[tag]
        except KeyError:
            raise TagSequenceError(f"tag {tag!r} not in tag set") from None

    def tag_of(self, label_id: int) -> str:
        """Label string of ``label_id``."""
        return self._labels[label_id]

    def __len__(self) -> int:
        return len(self._labels)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TagSet) and other._labels == self._labels

    def __hash__(self) -> int:
        return hash(self._labels)


def encode_tags(
    mentions: Iterable[Mention],
    n: int,
    typed: bool = True,
    scheme: TagScheme = TagScheme.BIOE,
) -> TagSequence:
    """Encode non-overlapping mentions as a tag sequence.

    Single-token spans carry ``B`` in BIO and BIOE (the scheme has no
    singleton symbol) and ``S`` in BIOES.

    Args:
        mentions: Mentions inside ``[0, n)``
        n: Sequence length
        typed: Emit ``-TYPE`` suffixes; untyped mentions never carry one
        scheme: Target tagging scheme

    Returns:
        TagSequence of length ``n`` with a full loss mask

    Raises:
        InvalidSpanError: If a mention is out of bounds
        TagSequenceError: If mentions overlap
    """
    tags = [OUTSIDE] * n
    ordered = sorted(set(mentions))
    previous: Mention | None = None
    for mention in ordered:
        check_span(mention, n)
        if previous is not None and mention.overlaps(previous):
            raise TagSequenceError(f"overlapping mentions {previous} and {mention}")
        previous = mention

        entity_type = mention.entity_type if typed else UNTYPED
        if mention.start == mention.end:
            single = "S" if scheme is TagScheme.BIOES else "B"
            tags[mention.start] = join_tag(single, entity_type)
            continue
        tags[mention.start] = join_tag("B", entity_type)
        for i in range(mention.start + 1, mention.end):
            tags[i] = join_tag("I", entity_type)
        last = "I" if scheme is TagScheme.BIO else "E"
        tags[mention.end] = join_tag(last, entity_type)
    return TagSequence(tags=tuple(tags))


def decode_tags(tags: TagSequence | Sequence[str]) -> list[Mention]:
    """Decode any tag sequence into sorted, non-overlapping mentions.

    Illegal sequences (typical of per-position argmax output) are repaired
    left to right:

    * ``I`` or ``E`` with no open span opens one, as ``B`` would;
    * a type switch inside a span closes it and opens a new one;
    * ``O``, ``B``, ``S`` or the end of input close an open span at the
      previous token;
    * ``E`` closes the span at its own position.

    Symbols outside ``B/I/E/S/O`` are read as ``O``. Valid sequences decode
    exactly.

    Args:
        tags: Tag strings or a TagSequence

    Returns:
        Mentions sorted by start
    """
    sequence = tags.tags if isinstance(tags, TagSequence) else tuple(tags)
    mentions: list[Mention] = []
    open_start: int | None = None
    open_type = UNTYPED

    for i, tag in enumerate(sequence):
        prefix, entity_type = split_tag(tag)

        if prefix in ("I", "E") and open_start is not None and entity_type == open_type:
            if prefix == "E":
                mentions.append(Mention(open_start, i, open_type))
                open_start = None
            continue

        if open_start is not None:
            mentions.append(Mention(open_start, i - 1, open_type))
            open_start = None

        if prefix in ("B", "I"):
            open_start, open_type = i, entity_type
        elif prefix in ("E", "S"):
            mentions.append(Mention(i, i, entity_type))

    if open_start is not None:
        mentions.append(Mention(open_start, len(sequence) - 1, open_type))
    return mentions


def is_valid_sequence(tags: TagSequence | Sequence[str], scheme: TagScheme) -> bool:
    """Check a tag sequence against the rules of ``scheme``.

    Args:
        tags: Tag strings or a TagSequence
        scheme: Scheme to check against

    Returns:
        True if the sequence is well formed
    """
    sequence = tags.tags if isinstance(tags, TagSequence) else tuple(tags)
    allowed = scheme.prefixes
    previous = (OUTSIDE, UNTYPED)
    for tag in sequence:
        prefix, entity_type = split_tag(tag)
        if prefix != OUTSIDE and prefix not in allowed:
            return False
        if prefix == OUTSIDE and entity_type:
            return False
        inside_previous = previous[0] in ("B", "I") and previous[1] == entity_type
        if prefix in ("I", "E") and not inside_previous:
            return False
        # In end-marked schemes an open multi-token span must continue.
        must_continue = previous[0] == "I" or (
            scheme is TagScheme.BIOES and previous[0] == "B"
        )
        if scheme is not TagScheme.BIO and must_continue:
            if prefix not in ("I", "E") or entity_type != previous[1]:
                return False
        previous = (prefix, entity_type)
    if scheme is not TagScheme.BIO:
        if previous[0] == "I" or (scheme is TagScheme.BIOES and previous[0] == "B"):
            return False
    return True


def convert_scheme(
    tags: TagSequence | Sequence[str],
    source: TagScheme = TagScheme.BIO,
    target: TagScheme = TagScheme.BIOE,
) -> TagSequence:
    """Relabel a valid sequence from one scheme into another.

    Spans, types and the loss mask are preserved, so converting back gives
    the original sequence.

    Args:
        tags: Tag strings or a TagSequence valid under ``source``
        source: Scheme of the input
        target: Scheme of the output

    Returns:
        TagSequence in the target scheme

    Raises:
        TagSequenceError: If the input is not valid under ``source``
    """
    sequence = tags if isinstance(tags, TagSequence) else TagSequence(tuple(tags))
    if not is_valid_sequence(sequence, source):
        raise TagSequenceError(
            f"sequence is not valid {source.value.upper()}: {list(sequence.tags)}"
        )
    converted = encode_tags(
        decode_tags(sequence), len(sequence), typed=True, scheme=target
    )
    return TagSequence(tags=converted.tags, loss_mask=sequence.loss_mask)


@dataclass(frozen=True)
class Dataset:
    """Sentences with their gold mentions and the ordered type inventory."""

    sentences: tuple[Sentence, ...]
    gold: Mapping[str, tuple[Mention, ...]]
    type_inventory: tuple[str, ...]

    @classmethod
    def build(
        cls,
        sentences: Sequence[Sentence],
        gold: Mapping[str, Iterable[Mention]],
        type_inventory: Sequence[str] | None = None,
    ) -> "Dataset":
        """Build a dataset, collapsing duplicate gold mentions.

        Args:
            sentences: Sentences in corpus order
            gold: Mentions per sentence id (missing ids mean no mentions)
            type_inventory: Ordered types; defaults to the sorted distinct
                types of the gold mentions

        Returns:
            Dataset instance
        """
        normalized = {
            sentence.id: tuple(sorted(set(gold.get(sentence.id, ()))))
            for sentence in sentences
        }
        for sentence_id, mentions in gold.items():
            if sentence_id not in normalized:
                normalized[sentence_id] = tuple(sorted(set(mentions)))
        if type_inventory is None:
            type_inventory = sorted(
                {m.entity_type for ms in normalized.values() for m in ms}
                - {UNTYPED}
            )
        return cls(
            sentences=tuple(sentences),
            gold=normalized,
            type_inventory=tuple(type_inventory),
        )

    def mentions(self, sentence: Sentence) -> tuple[Mention, ...]:
        """Gold mentions of ``sentence``."""
        return self.gold.get(sentence.id, ())

    @property
    def num_mentions(self) -> int:
        """Total number of gold mentions."""
        return sum(len(self.mentions(sentence)) for sentence in self.sentences)

    def with_type_inventory(self, types: Sequence[str]) -> "Dataset":
        """Copy of this dataset using another (e.g. the training) inventory."""
        return replace(self, type_inventory=tuple(types))

    def __len__(self) -> int:
        return len(self.sentences)


def parse_conll(text: str) -> Dataset:
    """Parse ``token<TAB>tag`` lines with blank-line sentence breaks.

    Tags may be BIO or BIOE with ``-TYPE`` suffixes, or ``O``. Windows line
    endings are accepted and ``-DOCSTART-`` lines are skipped.

    Args:
        text: Corpus content

    Returns:
        Dataset with decoded gold mentions

    Raises:
        CorpusParseError: On a wrong field count, an empty or whitespace
            bearing token, or an illegal tag symbol
    """
    sentences: list[Sentence] = []
    gold: dict[str, list[Mention]] = {}
    words: list[str] = []
    tags: list[str] = []

    def flush() -> None:
        if not words:
            return
        sentence = Sentence.from_words(str(len(sentences)), words)
        if not (
            is_valid_sequence(tags, TagScheme.BIOE)
            or is_valid_sequence(tags, TagScheme.BIO)
        ):
            logger.warning(
                f"Sentence {sentence.id} has an ill-formed tag sequence; repairing"
            )
        sentences.append(sentence)
        gold[sentence.id] = decode_tags(tags)
        words.clear()
        tags.clear()

    for line_number, line in enumerate(text.lstrip("\ufeff").splitlines(), start=1):
        if not line.strip():
            flush()
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise CorpusParseError(
                f"expected 2 tab-separated fields, found {len(fields)}", line_number
            )
        word, tag = fields
        if word == DOCSTART:
            flush()
            continue
        if not _INPUT_TAG.match(tag):
            raise CorpusParseError(f"illegal tag {tag!r}", line_number)
        if not word or _WHITESPACE.search(word):
            raise CorpusParseError(f"invalid token {word!r}", line_number)
        words.append(word)
        tags.append(tag)
    flush()

    dataset = Dataset.build(sentences, gold)
    logger.info(
        f"Parsed {len(dataset)} sentences with {dataset.num_mentions} mentions "
        f"over {len(dataset.type_inventory)} types"
    )
    return dataset


def serialize_conll(dataset: Dataset) -> str:
    """Write a dataset in canonical BIOE CoNLL form.

    Canonical form uses ``\\n`` line endings and a blank line after every
    sentence, so parsing a canonical file and serializing it again is
    byte-identical.

    Args:
        dataset: Dataset to write

    Returns:
        CoNLL text
    """
    lines: list[str] = []
    for sentence in dataset.sentences:
        encoded = encode_tags(dataset.mentions(sentence), len(sentence), typed=True)
        lines.extend(
            f"{word}\t{tag}\n" for word, tag in zip(sentence.words, encoded.tags)
        )
        lines.append("\n")
    return "".join(lines)


def validate_dataset(dataset: Dataset) -> list[str]:
    """Report structural problems of a dataset.

    Args:
        dataset: Dataset to check

    Returns:
        Human-readable violations; empty when the dataset is valid
    """
    violations: list[str] = []
    if not dataset.type_inventory:
        violations.append("type inventory is empty")
    known_types = set(dataset.type_inventory)
    lengths: dict[str, int] = {}
    for sentence in dataset.sentences:
        if sentence.id in lengths:
            violations.append(f"duplicate sentence id {sentence.id!r}")
        lengths[sentence.id] = len(sentence)

    for sentence_id, mentions in dataset.gold.items():
        if sentence_id not in lengths:
            violations.append(f"gold mentions for unknown sentence {sentence_id!r}")
            continue
        n = lengths[sentence_id]
        previous: Mention | None = None
        for mention in sorted(mentions):
            where = f"sentence {sentence_id!r} mention ({mention.start},{mention.end})"
            if mention.start > mention.end:
                violations.append(f"{where}: start>end")
            elif mention.start < 0 or mention.end >= n:
                violations.append(f"{where}: out of bounds for length {n}")
            if mention.entity_type not in known_types:
                violations.append(
                    f"{where}: unknown type {mention.entity_type!r}"
                )
            if previous is not None and mention.overlaps(previous):
                violations.append(
                    f"{where}: overlaps ({previous.start},{previous.end})"
                )
            previous = mention
    return violations
