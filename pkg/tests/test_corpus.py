"""Tests for the corpus data model, CoNLL codec and tag decoders."""

import numpy as np
import pytest

from splitner.corpus import Dataset
from splitner.corpus import Mention
from splitner.corpus import Sentence
from splitner.corpus import TagScheme
from splitner.corpus import TagSequence
from splitner.corpus import TagSet
from splitner.corpus import Token
from splitner.corpus import check_span
from splitner.corpus import convert_scheme
from splitner.corpus import decode_tags
from splitner.corpus import encode_tags
from splitner.corpus import is_valid_sequence
from splitner.corpus import parse_conll
from splitner.corpus import serialize_conll
from splitner.corpus import split_tag
from splitner.corpus import validate_dataset
from splitner.exceptions import CorpusParseError
from splitner.exceptions import InvalidSpanError
from splitner.exceptions import TagSequenceError


def test_parse_conll_reads_mentions(emily_conll: str) -> None:
    """Test that sentences and typed mentions are decoded."""
    dataset = parse_conll(emily_conll)

    assert len(dataset) == 2
    assert dataset.sentences[0].words == ("Emily", "lives", "in", "United", "States")
    assert dataset.mentions(dataset.sentences[0]) == (
        Mention(0, 0, "PER"),
        Mention(3, 4, "LOC"),
    )
    assert dataset.type_inventory == ("LOC", "NUM", "ORG", "PER")
    assert dataset.num_mentions == 4


def test_parse_conll_accepts_bio_and_crlf() -> None:
    """Test BIO input, Windows line endings and a byte order mark."""
    text = "\ufeffUnited\tB-LOC\r\nStates\tI-LOC\r\nrocks\tO\r\n"

    dataset = parse_conll(text)

    assert dataset.mentions(dataset.sentences[0]) == (Mention(0, 1, "LOC"),)


def test_parse_conll_skips_docstart() -> None:
    """Test that document separators are not sentences."""
    dataset = parse_conll("-DOCSTART-\tO\n\nIBM\tB-ORG\n\n")

    assert len(dataset) == 1
    assert dataset.sentences[0].id == "0"


@pytest.mark.parametrize(
    ("text", "line"),
    [
        ("Emily\tB-PER\textra\n", 1),
        ("Emily\tB-PER\nlives\n", 2),
        ("Emily\tX-PER\n", 1),
        ("Emily\tS-PER\n", 1),
        ("Emily\tB-\n", 1),
    ],
)
def test_parse_conll_errors_name_the_line(text: str, line: int) -> None:
    """Test that malformed lines are rejected with their line number."""
    with pytest.raises(CorpusParseError) as exc_info:
        parse_conll(text)

    assert exc_info.value.line_number == line


def test_parse_conll_repairs_ill_formed_tags(caplog: pytest.LogCaptureFixture) -> None:
    """Test that an I without a B is repaired and reported."""
    dataset = parse_conll("lives\tO\nStates\tI-LOC\n")

    assert dataset.mentions(dataset.sentences[0]) == (Mention(1, 1, "LOC"),)
    assert "ill-formed" in caplog.text


def test_serialize_conll_is_canonical(emily_conll: str) -> None:
    """Test that a canonical file survives parse and serialize unchanged."""
    assert serialize_conll(parse_conll(emily_conll)) == emily_conll


def test_token_and_sentence_validation() -> None:
    """Test that empty tokens, whitespace and empty sentences are refused."""
    with pytest.raises(ValueError):
        Token("", 0)
    with pytest.raises(ValueError):
        Token("a b", 0)
    with pytest.raises(ValueError):
        Sentence("s", ())


def test_span_text(emily: Sentence) -> None:
    """Test mention surface text."""
    assert emily.span_text(Mention(3, 4)) == "United States"
    with pytest.raises(InvalidSpanError):
        emily.span_text(Mention(4, 5))


def test_check_span() -> None:
    """Test span bounds checking."""
    check_span(Mention(0, 2), 3)
    with pytest.raises(InvalidSpanError):
        check_span(Mention(9, 9), 3)
    with pytest.raises(InvalidSpanError):
        check_span(Mention(2, 1), 3)


def test_mention_helpers() -> None:
    """Test mention length, typing and overlap."""
    mention = Mention(1, 3, "PER")

    assert mention.length == 3
    assert mention.untyped() == Mention(1, 3)
    assert mention.untyped().with_type("LOC") == Mention(1, 3, "LOC")
    assert mention.overlaps(Mention(3, 5))
    assert not mention.overlaps(Mention(4, 5))


def test_encode_tags_bioe() -> None:
    """Test the running example in BIOE."""
    tags = encode_tags([Mention(0, 0, "PER"), Mention(3, 4, "LOC")], 5)

    assert tags.tags == ("B-PER", "O", "O", "B-LOC", "E-LOC")
    assert tags.loss_mask == (True,) * 5


def test_encode_tags_untyped_and_schemes() -> None:
    """Test untyped output and the BIO / BIOES variants."""
    mentions = [Mention(0, 0, "PER"), Mention(2, 4, "LOC")]

    assert encode_tags(mentions, 5, typed=False).tags == ("B", "O", "B", "I", "E")
    assert encode_tags(mentions, 5, scheme=TagScheme.BIO).tags == (
        "B-PER", "O", "B-LOC", "I-LOC", "I-LOC",
    )
    assert encode_tags(mentions, 5, scheme=TagScheme.BIOES).tags == (
        "S-PER", "O", "B-LOC", "I-LOC", "E-LOC",
    )


def test_encode_tags_rejects_overlap() -> None:
    """Test that overlapping mentions cannot be encoded."""
    with pytest.raises(TagSequenceError):
        encode_tags([Mention(0, 2), Mention(2, 3)], 5)


def test_encode_tags_rejects_out_of_bounds() -> None:
    """Test that spans beyond the sentence cannot be encoded."""
    with pytest.raises(InvalidSpanError):
        encode_tags([Mention(3, 5)], 5)


def test_decode_tags_example() -> None:
    """Test decoding of a valid untyped sequence."""
    assert decode_tags(["B", "O", "O", "B", "E"]) == [Mention(0, 0), Mention(3, 4)]


@pytest.mark.parametrize(
    ("tags", "expected"),
    [
        (["I", "E"], [Mention(0, 1)]),
        (["O", "E"], [Mention(1, 1)]),
        (["B", "I"], [Mention(0, 1)]),
        (["B-PER", "I-LOC"], [Mention(0, 0, "PER"), Mention(1, 1, "LOC")]),
        (["B", "B", "E"], [Mention(0, 0), Mention(1, 2)]),
        (["X", "B"], [Mention(1, 1)]),
        (["E", "E"], [Mention(0, 0), Mention(1, 1)]),
    ],
)
def test_decode_tags_repairs(tags: list[str], expected: list[Mention]) -> None:
    """Test the deterministic repair of illegal sequences."""
    assert decode_tags(tags) == expected


def test_decode_accepts_tag_sequence() -> None:
    """Test that a TagSequence decodes like its tags."""
    assert decode_tags(TagSequence(("B-ORG",))) == [Mention(0, 0, "ORG")]


def test_codec_oracle_random_spans() -> None:
    """Test encode/decode identity and total repair on random inputs."""
    rng = np.random.default_rng(0)
    symbols = ["O", "B", "I", "E", "B-A", "I-A", "E-A", "I-B", "Q"]
    for _ in range(10_000):
        n = int(rng.integers(1, 51))
        mentions = []
        position = int(rng.integers(0, 3))
        while position < n:
            end = min(n - 1, position + int(rng.integers(0, 4)))
            mentions.append(Mention(position, end, str(rng.choice(["A", "B"]))))
            position = end + 1 + int(rng.integers(0, 3))
        assert decode_tags(encode_tags(mentions, n)) == mentions

        noise = [symbols[int(i)] for i in rng.integers(0, len(symbols), size=n)]
        decoded = decode_tags(noise)
        for first, second in zip(decoded, decoded[1:]):
            assert first.end < second.start
        for mention in decoded:
            check_span(mention, n)


def test_is_valid_sequence() -> None:
    """Test scheme validation."""
    assert is_valid_sequence(["B-PER", "E-PER"], TagScheme.BIOE)
    assert is_valid_sequence(["B-PER", "I-PER"], TagScheme.BIO)
    assert not is_valid_sequence(["B-PER", "I-PER"], TagScheme.BIOE)
    assert not is_valid_sequence(["O", "I-PER"], TagScheme.BIO)
    assert not is_valid_sequence(["B-PER", "E-LOC"], TagScheme.BIOE)
    assert not is_valid_sequence(["S-PER"], TagScheme.BIOE)
    assert is_valid_sequence(["S-PER", "B-LOC", "E-LOC"], TagScheme.BIOES)
    assert not is_valid_sequence(["B-LOC"], TagScheme.BIOES)


def test_convert_scheme_round_trip() -> None:
    """Test BIO to BIOE conversion and back."""
    bio = TagSequence(("B-LOC", "I-LOC", "O", "B-PER"), (True, False, True, True))

    bioe = convert_scheme(bio)

    assert bioe.tags == ("B-LOC", "E-LOC", "O", "B-PER")
    assert bioe.loss_mask == bio.loss_mask
    assert convert_scheme(bioe, TagScheme.BIOE, TagScheme.BIO) == bio


def test_convert_scheme_rejects_invalid_input() -> None:
    """Test that only valid sequences are converted."""
    with pytest.raises(TagSequenceError):
        convert_scheme(["O", "I-PER"])


def test_tag_sequence_mask_length() -> None:
    """Test that masks must match the tags."""
    with pytest.raises(TagSequenceError):
        TagSequence(("O", "O"), (True,))


def test_split_tag_keeps_hyphenated_types() -> None:
    """Test that only the first hyphen separates prefix and type."""
    assert split_tag("B-WORK-OF-ART") == ("B", "WORK-OF-ART")
    assert split_tag("O") == ("O", "")


def test_tagset_sizes() -> None:
    """Test the untyped and typed label inventories."""
    typed = TagSet.typed(["LOC", "PER"])

    assert TagSet.untyped().labels == ("O", "B", "I", "E")
    assert len(typed) == 3 * 2 + 1
    assert typed.id_of("O") == 0
    assert typed.tag_of(typed.id_of("E-PER")) == "E-PER"
    assert typed.is_typed
    assert not TagSet.untyped().is_typed
    with pytest.raises(TagSequenceError):
        typed.id_of("B-ORG")


def test_dataset_build_dedups_and_sorts(emily: Sentence) -> None:
    """Test that duplicate gold mentions collapse."""
    gold = {"0": [Mention(3, 4, "LOC"), Mention(0, 0, "PER"), Mention(0, 0, "PER")]}
    dataset = Dataset.build([emily], gold)

    assert dataset.mentions(emily) == (Mention(0, 0, "PER"), Mention(3, 4, "LOC"))
    assert dataset.with_type_inventory(["PER"]).type_inventory == ("PER",)


def test_validate_dataset(emily: Sentence) -> None:
    """Test that structural problems are reported."""
    dataset = Dataset(
        sentences=(emily, emily),
        gold={
            "0": (Mention(0, 1, "PER"), Mention(1, 2, "PER"), Mention(4, 7, "LOC")),
            "9": (),
        },
        type_inventory=("PER",),
    )

    problems = validate_dataset(dataset)

    assert any("duplicate sentence id" in p for p in problems)
    assert any("unknown sentence" in p for p in problems)
    assert any("overlaps" in p for p in problems)
    assert any("out of bounds" in p for p in problems)
    assert any("unknown type 'LOC'" in p for p in problems)


def test_validate_dataset_clean(tiny_dataset: Dataset) -> None:
    """Test that a well-formed dataset has no violations."""
    assert validate_dataset(tiny_dataset) == []
