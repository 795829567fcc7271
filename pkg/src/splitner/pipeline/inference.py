"""End-to-end inference for every variant and the JSON-lines prediction format."""

import json
import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from splitner.config import get_config
from splitner.corpus import Dataset
from splitner.corpus import Mention
from splitner.corpus import Sentence
from splitner.corpus import check_span
from splitner.exceptions import CorpusParseError
from splitner.exceptions import InvalidSpanError
from splitner.exceptions import ModelMismatchError
from splitner.models.base import ScoredMention
from splitner.models.classifier import ClassifierModel
from splitner.models.classifier import classify_spans
from splitner.models.detector import DetectorModel
from splitner.models.detector import detect_scored_spans
from splitner.models.variants import ModelBundle
from splitner.models.variants import Variant
from splitner.models.variants import predict_single
from splitner.pipeline.evaluation import EvalReport
from splitner.pipeline.evaluation import micro_f1

logger = logging.getLogger(__name__)


def check_compatible(detector: DetectorModel, classifier: ClassifierModel) -> None:
    """Require a detector and classifier that can be chained.

    Raises:
        ModelMismatchError: If vocabularies differ, the detector is typed,
            or the recorded type inventories differ
    """
    if detector.vocab.entries != classifier.vocab.entries:
        raise ModelMismatchError("detector and classifier use different vocabularies")
    if detector.tagset.is_typed:
        raise ModelMismatchError("a split pipeline needs an untyped span detector")
    if detector.entity_types and detector.entity_types != classifier.entity_types:
        raise ModelMismatchError(
            f"detector types {list(detector.entity_types)} differ from classifier "
            f"types {list(classifier.entity_types)}"
        )


def predict_split(
    sentences: Sequence[Sentence],
    detector: DetectorModel,
    classifier: ClassifierModel,
    batch_size: int = 16,
) -> list[list[ScoredMention]]:
    """Detect spans, then classify each detected span.

    Each mention scores the classifier probability of its type.
    """
    detected = detect_scored_spans(sentences, detector, batch_size=batch_size)
    items = [
        (sentence, scored.mention)
        for sentence, spans in zip(sentences, detected)
        for scored in spans
    ]
    typed = iter(classify_spans(items, classifier, batch_size=batch_size))
    results = []
    for spans in detected:
        row = []
        for scored in spans:
            entity_type, distribution = next(typed)
            row.append(
                ScoredMention(
                    scored.mention.with_type(entity_type), float(distribution.max())
                )
            )
        results.append(row)
    return results


def _predict_shard(
    bundle: ModelBundle, sentences: Sequence[Sentence], batch_size: int
) -> list[list[ScoredMention]]:
    if bundle.classifier is not None:
        return predict_split(sentences, bundle.detector, bundle.classifier, batch_size)
    return predict_single(sentences, bundle.detector, batch_size)


def predict(
    bundle: ModelBundle,
    sentences: Sequence[Sentence],
    batch_size: int = 16,
    workers: int | None = None,
) -> list[list[ScoredMention]]:
    """Typed mentions of any variant, in input order.

    Sentences are split into contiguous shards that run on a thread pool
    reading the frozen models.

    Args:
        bundle: Models of one variant
        sentences: Sentences to label
        batch_size: Inputs per forward pass
        workers: Worker cap; defaults to ``SPLITNER_THREADS``

    Returns:
        Scored mentions per sentence
    """
    if bundle.classifier is not None:
        check_compatible(bundle.detector, bundle.classifier)
        bundle.classifier.eval()
    bundle.detector.eval()
    workers = max(1, workers or get_config().threads)
    if workers == 1 or len(sentences) <= batch_size:
        return _predict_shard(bundle, sentences, batch_size)

    shard_size = max(batch_size, -(-len(sentences) // workers))
    shards = [sentences[i : i + shard_size] for i in range(0, len(sentences), shard_size)]
    logger.debug(f"Predicting {len(sentences)} sentences in {len(shards)} shards")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(lambda shard: _predict_shard(bundle, shard, batch_size), shards)
        return [row for part in parts for row in part]


def run_pipeline(
    sentences: Sequence[Sentence],
    detector: DetectorModel,
    classifier: ClassifierModel,
    batch_size: int = 16,
) -> list[list[Mention]]:
    """Typed mentions of the split pipeline.

    Spans the detector misses can never be recovered by the classifier.

    Args:
        sentences: Sentences to label
        detector: Untyped span detector
        classifier: Span classifier
        batch_size: Inputs per forward pass

    Returns:
        Non-overlapping typed mentions per sentence

    Raises:
        ModelMismatchError: If the models cannot be chained
    """
    bundle = ModelBundle(Variant.SPLIT_QA_QA, detector=detector, classifier=classifier)
    return [[item.mention for item in row] for row in predict(bundle, sentences, batch_size)]


def evaluate_classifier(
    dataset: Dataset, classifier: ClassifierModel, batch_size: int = 16
) -> EvalReport:
    """Typed scores of the classifier alone, on gold spans.

    Args:
        dataset: Dataset with gold mentions
        classifier: Span classifier
        batch_size: Inputs per forward pass

    Returns:
        Typed EvalReport (precision equals recall equals accuracy)
    """
    items = [
        (sentence, mention)
        for sentence in dataset.sentences
        for mention in dataset.mentions(sentence)
    ]
    classified = classify_spans(items, classifier, batch_size=batch_size)
    predicted: dict[str, list[Mention]] = {}
    for (sentence, mention), (entity_type, _) in zip(items, classified):
        predicted.setdefault(sentence.id, []).append(mention.with_type(entity_type))
    return micro_f1(dataset.gold, predicted, mode="typed")


@dataclass(frozen=True)
class PredictionRecord:
    """One line of a predictions file."""

    id: str
    tokens: tuple[str, ...]
    mentions: tuple[ScoredMention, ...]

    def to_json(self) -> str:
        return json.dumps(
            {
                "id": self.id,
                "tokens": list(self.tokens),
                "mentions": [
                    {
                        "start": item.mention.start,
                        "end": item.mention.end,
                        "type": item.mention.entity_type,
                        "score": round(item.score, 6),
                    }
                    for item in self.mentions
                ],
            },
            ensure_ascii=False,
        )


def write_predictions(
    path: Path, sentences: Sequence[Sentence], predictions: Sequence[Sequence[ScoredMention]]
) -> None:
    """Write one JSON object per sentence.

    Args:
        path: Destination file
        sentences: Labelled sentences
        predictions: Scored mentions per sentence
    """
    lines = [
        PredictionRecord(sentence.id, sentence.words, tuple(mentions)).to_json() + "\n"
        for sentence, mentions in zip(sentences, predictions, strict=True)
    ]
    path.write_text("".join(lines), encoding="utf-8")
    logger.info(f"Wrote predictions for {len(lines)} sentences to {path}")


def read_predictions(path: Path) -> list[PredictionRecord]:
    """Read a predictions file.

    Raises:
        CorpusParseError: On malformed JSON or out-of-bounds mentions
    """
    records = []
    for line_number, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
            tokens = tuple(str(token) for token in data["tokens"])
            mentions = []
            for item in data["mentions"]:
                mention = Mention(int(item["start"]), int(item["end"]), str(item["type"]))
                check_span(mention, len(tokens))
                mentions.append(ScoredMention(mention, float(item.get("score", 1.0))))
            records.append(PredictionRecord(str(data["id"]), tokens, tuple(mentions)))
        except (ValueError, KeyError, TypeError, InvalidSpanError) as e:
            raise CorpusParseError(f"bad prediction record: {e}", line_number) from e
    return records


def predictions_by_id(records: Sequence[PredictionRecord]) -> dict[str, list[Mention]]:
    """Mentions keyed by sentence id, for scoring."""
    return {record.id: [item.mention for item in record.mentions] for record in records}
