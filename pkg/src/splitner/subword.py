"""WordPiece vocabulary, tokenizer and word/subtoken label alignment."""

import logging
from collections import Counter
from collections.abc import Iterable
from collections.abc import Sequence
from dataclasses import dataclass
from dataclasses import field
from pathlib import Path
from typing import TypeVar

from splitner.corpus import OUTSIDE
from splitner.corpus import Dataset
from splitner.corpus import TagSequence
from splitner.exceptions import TagSequenceError
from splitner.exceptions import VocabularyError

logger = logging.getLogger(__name__)

PAD = "[PAD]"
UNK = "[UNK]"
CLS = "[CLS]"
SEP = "[SEP]"
SPECIALS = (PAD, UNK, CLS, SEP)
CONTINUATION = "##"

T = TypeVar("T")


@dataclass(frozen=True)
class Vocab:
    """Subword inventory; ids are positions in ``entries``, specials first."""

    entries: tuple[str, ...]
    _lookup: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        """Build the lookup table and validate the entries."""
        if self.entries[: len(SPECIALS)] != SPECIALS:
            raise VocabularyError(f"vocabulary must start with {list(SPECIALS)}")
        lookup: dict[str, int] = {}
        for i, entry in enumerate(self.entries):
            if not entry or any(c.isspace() for c in entry):
                raise VocabularyError(f"invalid vocabulary entry at id {i}: {entry!r}")
            if entry in lookup:
                raise VocabularyError(f"duplicate vocabulary entry {entry!r}")
            lookup[entry] = i
        object.__setattr__(self, "_lookup", lookup)

    @property
    def pad_id(self) -> int:
        return self._lookup[PAD]

    @property
    def unk_id(self) -> int:
        return self._lookup[UNK]

    @property
    def cls_id(self) -> int:
        return self._lookup[CLS]

    @property
    def sep_id(self) -> int:
        return self._lookup[SEP]

    @property
    def characters(self) -> tuple[str, ...]:
        """Single-character word-initial entries, in id order."""
        return tuple(
            entry
            for entry in self.entries[len(SPECIALS) :]
            if len(entry) == 1
        )

    def id_of(self, token: str) -> int:
        """Id of ``token``, or the UNK id when absent."""
        return self._lookup.get(token, self.unk_id)

    def token_of(self, token_id: int) -> str:
        """Entry with id ``token_id``."""
        return self.entries[token_id]

    def __contains__(self, token: object) -> bool:
        return token in self._lookup

    def __len__(self) -> int:
        return len(self.entries)

    def save(self, path: Path) -> None:
        """Write one entry per line in id order.

        Args:
            path: Destination file
        """
        path.write_text("".join(f"{entry}\n" for entry in self.entries), encoding="utf-8")
        logger.info(f"Saved vocabulary of {len(self)} entries to {path}")

    @classmethod
    def load(cls, path: Path) -> "Vocab":
        """Read a vocabulary file.

        Args:
            path: File with one entry per line

        Returns:
            Vocab instance

        Raises:
            VocabularyError: If the file is unreadable or malformed
        """
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise VocabularyError(f"cannot read vocabulary {path}: {e}") from e
        return cls(tuple(text.splitlines()))


def build_vocab(
    corpus: Dataset | Iterable[str],
    size: int,
    reserved_text: Iterable[str] = (),
    lowercase: bool = False,
) -> Vocab:
    """Build a WordPiece vocabulary with full character fallback.

    The vocabulary holds the specials, every character of the corpus in both
    word-initial and ``##`` continuation form, then the most frequent whole
    words until ``size`` entries exist (frequency ties broken
    lexicographically).

    Args:
        corpus: Dataset or plain word stream
        size: Maximum number of entries
        reserved_text: Extra text (question templates) whose words and
            characters must be covered
        lowercase: Lowercase words before counting

    Returns:
        Vocab instance

    Raises:
        VocabularyError: If ``size`` cannot hold specials and characters
    """
    if isinstance(corpus, Dataset):
        words: list[str] = [w for s in corpus.sentences for w in s.words]
    else:
        words = list(corpus)
    for text in reserved_text:
        words.extend(text.split())
    if lowercase:
        words = [word.lower() for word in words]

    charset = sorted({c for word in words for c in word})
    minimum = len(SPECIALS) + 2 * len(charset)
    if size < minimum:
        raise VocabularyError(
            f"vocabulary size {size} is below the minimum {minimum} "
            f"({len(SPECIALS)} specials + {len(charset)} characters in two forms)"
        )

    entries = list(SPECIALS)
    entries.extend(charset)
    entries.extend(CONTINUATION + c for c in charset)
    present = set(entries)
    counts = Counter(words)
    for word, _ in sorted(counts.items(), key=lambda item: (-item[1], item[0])):
        if len(entries) >= size:
            break
        if word not in present:
            entries.append(word)
            present.add(word)

    vocab = Vocab(tuple(entries))
    logger.info(
        f"Built vocabulary: {len(vocab)} entries, {len(charset)} characters, "
        f"{len(counts)} distinct words"
    )
    return vocab


def tokenize_word(word: str, vocab: Vocab, lowercase: bool = False) -> list[str]:
    """Greedy longest-match-first WordPiece tokenization of one word.

    Args:
        word: Non-empty whitespace-free word
        vocab: Vocabulary to match against
        lowercase: Lowercase the word first

    Returns:
        Subtokens; ``[UNK]`` alone when any position has no match
    """
    if lowercase:
        word = word.lower()

    pieces: list[str] = []
    start = 0
    while start < len(word):
        end = len(word)
        match = None
        while start < end:
            candidate = word[start:end]
            if start > 0:
                candidate = CONTINUATION + candidate
            if candidate in vocab:
                match = candidate
                break
            end -= 1
        if match is None:
            return [UNK]
        pieces.append(match)
        start = end
    return pieces


@dataclass(frozen=True)
class SubtokenAlignment:
    """Maps every subtoken position to its word (None for non-word slots)."""

    subtokens: tuple[str, ...]
    word_of: tuple[int | None, ...]
    is_first: tuple[bool, ...]

    def __post_init__(self) -> None:
        """Check that words map to contiguous runs with one first subtoken."""
        if not len(self.subtokens) == len(self.word_of) == len(self.is_first):
            raise TagSequenceError("alignment fields differ in length")
        expected = 0
        previous: int | None = None
        for word, first in zip(self.word_of, self.is_first):
            if word is None:
                if first:
                    raise TagSequenceError("non-word position marked as first")
                previous = None
                continue
            if word == expected:
                if not first:
                    raise TagSequenceError(f"word {word} does not start with a first subtoken")
                expected += 1
            elif word == previous and word == expected - 1:
                if first:
                    raise TagSequenceError(f"word {word} has two first subtokens")
            else:
                raise TagSequenceError(f"word {word} is not contiguous")
            previous = word

    @property
    def num_words(self) -> int:
        """Number of words covered."""
        return sum(self.is_first)


def align_words(
    words: Sequence[str], vocab: Vocab, lowercase: bool = False
) -> SubtokenAlignment:
    """Tokenize a word sequence and record the alignment.

    Args:
        words: Words of a sentence
        vocab: Vocabulary
        lowercase: Lowercase before matching

    Returns:
        SubtokenAlignment covering every word
    """
    subtokens: list[str] = []
    word_of: list[int | None] = []
    is_first: list[bool] = []
    for i, word in enumerate(words):
        pieces = tokenize_word(word, vocab, lowercase)
        subtokens.extend(pieces)
        word_of.extend([i] * len(pieces))
        is_first.extend([True] + [False] * (len(pieces) - 1))
    return SubtokenAlignment(tuple(subtokens), tuple(word_of), tuple(is_first))


def align_labels(word_tags: TagSequence, alignment: SubtokenAlignment) -> TagSequence:
    """Project word-level tags onto subtokens.

    First subtokens carry their word's tag and its loss mask; continuation
    subtokens copy the tag without loss; non-word positions (specials,
    question) get ``O`` without loss.

    Args:
        word_tags: One tag per word
        alignment: Word/subtoken alignment

    Returns:
        TagSequence over subtokens

    Raises:
        TagSequenceError: If the tag count differs from the word count
    """
    if len(word_tags) != alignment.num_words:
        raise TagSequenceError(
            f"{len(word_tags)} word tags for an alignment of "
            f"{alignment.num_words} words"
        )
    tags: list[str] = []
    mask: list[bool] = []
    for word, first in zip(alignment.word_of, alignment.is_first):
        if word is None:
            tags.append(OUTSIDE)
            mask.append(False)
        else:
            tags.append(word_tags.tags[word])
            mask.append(first and word_tags.loss_mask[word])
    return TagSequence(tags=tuple(tags), loss_mask=tuple(mask))


def first_subtoken_values(values: Sequence[T], alignment: SubtokenAlignment) -> list[T]:
    """Read per-subtoken values back at first-subtoken positions.

    Args:
        values: One value per aligned position
        alignment: Word/subtoken alignment

    Returns:
        One value per word, in word order
    """
    return [value for value, first in zip(values, alignment.is_first) if first]


def surface_pieces(word: str, pieces: Sequence[str]) -> list[str]:
    """Recover the original casing of a word's subtokens.

    Lowercased tokenization matches the vocabulary but hides the word shape;
    this slices the unmodified ``word`` along the piece boundaries instead.

    Args:
        word: Word as it appears in the sentence
        pieces: Its subtokens from :func:`tokenize_word`

    Returns:
        Pieces with the casing of ``word``; ``pieces`` unchanged when they do
        not spell the word (``[UNK]``, or lowercasing changed its length)
    """
    bare = [
        piece[len(CONTINUATION) :] if k and piece.startswith(CONTINUATION) else piece
        for k, piece in enumerate(pieces)
    ]
    if UNK in pieces or sum(len(b) for b in bare) != len(word):
        return list(pieces)
    surfaces: list[str] = []
    start = 0
    for k, text in enumerate(bare):
        cased = word[start : start + len(text)]
        surfaces.append(CONTINUATION + cased if k else cased)
        start += len(text)
    return surfaces


def surface_subtokens(words: Sequence[str], alignment: SubtokenAlignment) -> tuple[str, ...]:
    """Original-case form of every aligned subtoken.

    Positions outside any word (specials, question) are returned as they are.
    """
    subtokens = alignment.subtokens
    surfaces: list[str] = []
    i = 0
    while i < len(subtokens):
        word = alignment.word_of[i]
        if word is None:
            surfaces.append(subtokens[i])
            i += 1
            continue
        j = i
        while j < len(subtokens) and alignment.word_of[j] == word:
            j += 1
        surfaces.extend(surface_pieces(words[word], subtokens[i:j]))
        i = j
    return tuple(surfaces)
