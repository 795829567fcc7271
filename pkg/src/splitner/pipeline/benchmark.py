"""Encoder query counts and wall-clock latency of the model variants."""

import logging
import time
from collections.abc import Mapping
from collections.abc import Sequence
from enum import Enum

import torch
from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field

from splitner.config import RunConfig
from splitner.corpus import Dataset
from splitner.corpus import Mention
from splitner.exceptions import ConfigurationError
from splitner.models.training import train_epoch
from splitner.models.variants import Variant
from splitner.models.variants import VariantRegistry
from splitner.pipeline.evaluation import summarize_runs
from splitner.pipeline.inference import predict
from splitner.subword import Vocab

logger = logging.getLogger(__name__)


class QueryKind(str, Enum):
    """Kinds of encoder passes over a dataset."""

    SPLIT_DETECTION = "split_detection"
    SPLIT_CLASSIFICATION = "split_classification"
    SINGLE_QA = "single_qa"
    SINGLE_SEQTAG = "single_seqtag"


def count_queries(
    kind: QueryKind | str,
    dataset: Dataset,
    predicted_mentions: Mapping[str, Sequence[Mention]] | None = None,
) -> int:
    """Exact number of encoder inputs of one pass over ``dataset``.

    Args:
        kind: Kind of pass
        dataset: Dataset with N sentences and T types
        predicted_mentions: Detected spans per sentence id; the
            classification pass queries these, or the gold mentions when
            None

    Returns:
        N for detection and sequence tagging, the number of mentions for
        classification, N x T for the per-type QA baseline
    """
    kind = QueryKind(kind)
    n = len(dataset)
    if kind is QueryKind.SPLIT_CLASSIFICATION:
        if predicted_mentions is None:
            return dataset.num_mentions
        return sum(len(predicted_mentions.get(s.id, ())) for s in dataset.sentences)
    if kind is QueryKind.SINGLE_QA:
        return n * len(dataset.type_inventory)
    return n


def variant_queries(
    variant: Variant | str,
    dataset: Dataset,
    predicted_mentions: Mapping[str, Sequence[Mention]] | None = None,
) -> int:
    """Total encoder inputs of a variant over ``dataset``."""
    spec = VariantRegistry.get_instance().get_spec(variant)
    if spec.needs_classifier:
        return count_queries(QueryKind.SPLIT_DETECTION, dataset) + count_queries(
            QueryKind.SPLIT_CLASSIFICATION, dataset, predicted_mentions
        )
    if Variant(variant) is Variant.SINGLE_QA:
        return count_queries(QueryKind.SINGLE_QA, dataset)
    return count_queries(QueryKind.SINGLE_SEQTAG, dataset)


class VariantTiming(BaseModel):
    """Latency and query counts of one variant."""

    model_config = ConfigDict(frozen=True)

    variant: str
    runs: int = Field(ge=1)
    train_seconds_per_epoch: float = Field(ge=0.0)
    train_seconds_std: float = Field(ge=0.0)
    inference_seconds: float = Field(ge=0.0)
    inference_seconds_std: float = Field(ge=0.0)
    train_input_count: int = Field(ge=0)
    inference_input_count: int = Field(ge=0)


class BenchReport(BaseModel):
    """Benchmark of several variants under one encoder configuration."""

    model_config = ConfigDict(frozen=True)

    train_sentences: int
    test_sentences: int
    types: int
    variants: list[VariantTiming]

    def timing(self, variant: Variant | str) -> VariantTiming:
        """Entry of one variant."""
        name = Variant(variant).value
        for entry in self.variants:
            if entry.variant == name:
                return entry
        raise KeyError(name)


def benchmark_variant(
    variant: Variant | str,
    train: Dataset,
    test: Dataset,
    vocab: Vocab,
    config: RunConfig,
    runs: int,
) -> VariantTiming:
    """Time one training epoch and one inference pass, ``runs`` times.

    Every run starts from the same initialization, so query counts are
    identical across runs and only the times vary.
    """
    registry = VariantRegistry.get_instance()
    train_times: list[float] = []
    inference_times: list[float] = []
    train_inputs = inference_inputs = 0
    for run in range(runs):
        bundle = registry.build_models(variant, train, vocab, config)

        started = time.perf_counter()
        train_inputs = train_epoch(bundle.detector, train, config).samples
        if bundle.classifier is not None:
            train_inputs += train_epoch(bundle.classifier, train, config).samples
        train_times.append(time.perf_counter() - started)

        started = time.perf_counter()
        predictions = predict(bundle, test.sentences, config.batch_size, workers=1)
        inference_times.append(time.perf_counter() - started)

        detected = {
            sentence.id: [item.mention for item in row]
            for sentence, row in zip(test.sentences, predictions)
        }
        inference_inputs = variant_queries(variant, test, detected)
        logger.info(
            f"Benchmark {Variant(variant).value} run {run}: train {train_times[-1]:.3f}s, "
            f"inference {inference_times[-1]:.3f}s",
            extra={
                "variant": Variant(variant).value,
                "run": run,
                "train_seconds": train_times[-1],
                "inference_seconds": inference_times[-1],
            },
        )

    train_mean, train_std = summarize_runs(train_times)
    inference_mean, inference_std = summarize_runs(inference_times)
    return VariantTiming(
        variant=Variant(variant).value,
        runs=runs,
        train_seconds_per_epoch=train_mean,
        train_seconds_std=train_std,
        inference_seconds=inference_mean,
        inference_seconds_std=inference_std,
        train_input_count=train_inputs,
        inference_input_count=inference_inputs,
    )


def benchmark(
    variants: Sequence[Variant | str],
    train: Dataset,
    test: Dataset,
    vocab: Vocab,
    config: RunConfig,
    runs: int | None = None,
) -> BenchReport:
    """Benchmark variants under one encoder configuration on one thread.

    Split training time is the sum of the detector and classifier epochs.

    Args:
        variants: Variants to compare
        train: Training split (one epoch is timed)
        test: Test split (one inference pass is timed)
        vocab: Shared vocabulary
        config: Run configuration shared by every variant
        runs: Repetitions; defaults to ``config.benchmark_runs``

    Returns:
        BenchReport

    Raises:
        ConfigurationError: If runs is below 1
    """
    runs = config.benchmark_runs if runs is None else runs
    if runs < 1:
        raise ConfigurationError(f"benchmark runs must be >= 1, got {runs}")
    previous_threads = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        timings = [
            benchmark_variant(variant, train, test, vocab, config, runs) for variant in variants
        ]
    finally:
        torch.set_num_threads(previous_threads)
    return BenchReport(
        train_sentences=len(train),
        test_sentences=len(test),
        types=len(train.type_inventory),
        variants=timings,
    )


def render_bench_table(report: BenchReport) -> str:
    """Plain-text table of a benchmark report."""
    header = (
        f"{'variant':<28}{'train s/epoch':>16}{'inference s':>16}"
        f"{'train inputs':>14}{'inf. inputs':>13}"
    )
    rows = [header, "-" * len(header)]
    for entry in report.variants:
        train = f"{entry.train_seconds_per_epoch:.3f}±{entry.train_seconds_std:.3f}"
        inference = f"{entry.inference_seconds:.3f}±{entry.inference_seconds_std:.3f}"
        rows.append(
            f"{entry.variant:<28}{train:>16}{inference:>16}"
            f"{entry.train_input_count:>14}{entry.inference_input_count:>13}"
        )
    rows.append(
        f"({report.train_sentences} train / {report.test_sentences} test sentences, "
        f"{report.types} types, {report.variants[0].runs if report.variants else 0} runs)"
    )
    return "\n".join(rows) + "\n"
