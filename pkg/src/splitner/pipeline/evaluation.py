"""Mention-level micro precision, recall and F1."""

import logging
from collections import Counter
from collections.abc import Iterable
from collections.abc import Mapping
from collections.abc import Sequence
from typing import Literal

import numpy as np
from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field

from splitner.corpus import Mention

logger = logging.getLogger(__name__)

EvalMode = Literal["typed", "untyped"]


class TypeScore(BaseModel):
    """Counts and scores of one entity type."""

    model_config = ConfigDict(frozen=True)

    tp: int = Field(ge=0)
    fp: int = Field(ge=0)
    fn: int = Field(ge=0)
    precision: float = Field(ge=0.0, le=1.0)
    recall: float = Field(ge=0.0, le=1.0)
    f1: float = Field(ge=0.0, le=1.0)


class EvalReport(BaseModel):
    """Micro-averaged scores plus a per-type breakdown (typed mode only)."""

    model_config = ConfigDict(frozen=True)

    mode: EvalMode
    tp: int = Field(ge=0)
    fp: int = Field(ge=0)
    fn: int = Field(ge=0)
    precision: float = Field(ge=0.0, le=1.0)
    recall: float = Field(ge=0.0, le=1.0)
    f1: float = Field(ge=0.0, le=1.0)
    per_type: dict[str, TypeScore] = Field(default_factory=dict)


def _scores(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    if tp + fp + fn == 0:
        return 1.0, 1.0, 1.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def _key(mention: Mention, mode: EvalMode) -> tuple[int, int, str]:
    return (mention.start, mention.end, mention.entity_type if mode == "typed" else "")


def micro_f1(
    gold: Mapping[str, Iterable[Mention]],
    pred: Mapping[str, Iterable[Mention]],
    mode: EvalMode = "typed",
) -> EvalReport:
    """Score predictions against gold mentions.

    Mentions are compared as sets per sentence: ``(start, end, type)`` in
    typed mode and ``(start, end)`` in untyped mode. When gold and
    predictions are both empty everywhere, every score is 1.

    Args:
        gold: Gold mentions per sentence id
        pred: Predicted mentions per sentence id
        mode: Whether types must match

    Returns:
        EvalReport
    """
    tp = fp = fn = 0
    by_type: dict[str, Counter[str]] = {}
    for sentence_id in sorted(set(gold) | set(pred)):
        gold_keys = {_key(m, mode) for m in gold.get(sentence_id, ())}
        pred_keys = {_key(m, mode) for m in pred.get(sentence_id, ())}
        matched = gold_keys & pred_keys
        tp += len(matched)
        fp += len(pred_keys - matched)
        fn += len(gold_keys - matched)
        if mode == "typed":
            for outcome, keys in (
                ("tp", matched),
                ("fp", pred_keys - matched),
                ("fn", gold_keys - matched),
            ):
                for _, _, entity_type in keys:
                    by_type.setdefault(entity_type, Counter())[outcome] += 1

    per_type = {}
    for entity_type in sorted(by_type):
        counts = by_type[entity_type]
        p, r, f = _scores(counts["tp"], counts["fp"], counts["fn"])
        per_type[entity_type] = TypeScore(
            tp=counts["tp"], fp=counts["fp"], fn=counts["fn"], precision=p, recall=r, f1=f
        )
    precision, recall, f1 = _scores(tp, fp, fn)
    return EvalReport(
        mode=mode,
        tp=tp,
        fp=fp,
        fn=fn,
        precision=precision,
        recall=recall,
        f1=f1,
        per_type=per_type,
    )


def summarize_runs(values: Sequence[float]) -> tuple[float, float]:
    """Mean and sample standard deviation (0 for a single run).

    Args:
        values: One measurement per run

    Returns:
        ``(mean, std)``
    """
    if not values:
        raise ValueError("cannot summarize zero runs")
    array = np.asarray(values, dtype=np.float64)
    std = float(array.std(ddof=1)) if len(array) > 1 else 0.0
    return float(array.mean()), std


def render_eval_table(report: EvalReport) -> str:
    """Plain-text table of a report, overall row last."""
    header = f"{'type':<16}{'P':>8}{'R':>8}{'F1':>8}{'TP':>7}{'FP':>7}{'FN':>7}"
    rows = [header, "-" * len(header)]
    for entity_type, score in report.per_type.items():
        rows.append(
            f"{entity_type:<16}{score.precision:>8.3f}{score.recall:>8.3f}{score.f1:>8.3f}"
            f"{score.tp:>7}{score.fp:>7}{score.fn:>7}"
        )
    rows.append(
        f"{'micro (' + report.mode + ')':<16}{report.precision:>8.3f}{report.recall:>8.3f}"
        f"{report.f1:>8.3f}{report.tp:>7}{report.fp:>7}{report.fn:>7}"
    )
    return "\n".join(rows) + "\n"
