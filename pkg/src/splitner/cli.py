"""Command-line entry point.

Every command reads a flat key=value run file (``--config``) and writes its
outputs, together with a canonical copy of the effective configuration
(``run.conf``), into ``--out``.
"""

import argparse
import json
import logging
import sys
from collections.abc import Callable
from collections.abc import Sequence
from pathlib import Path

import torch

from splitner import __version__
from splitner.config import RunConfig
from splitner.config import get_config
from splitner.corpus import Dataset
from splitner.corpus import parse_conll
from splitner.corpus import serialize_conll
from splitner.corpus import validate_dataset
from splitner.exceptions import ConfigurationError
from splitner.exceptions import SplitNerException
from splitner.features import pattern_of
from splitner.logging_config import configure_logging
from splitner.models.inputs import question_words
from splitner.models.inputs import reserved_question_text
from splitner.models.persistence import load_classifier
from splitner.models.persistence import load_detector
from splitner.models.persistence import meta_path
from splitner.models.persistence import read_metadata
from splitner.models.persistence import save_model
from splitner.models.training import EpochResult
from splitner.models.training import fit
from splitner.models.variants import ModelBundle
from splitner.models.variants import Variant
from splitner.models.variants import VariantRegistry
from splitner.pipeline.benchmark import benchmark
from splitner.pipeline.benchmark import render_bench_table
from splitner.pipeline.evaluation import micro_f1
from splitner.pipeline.evaluation import render_eval_table
from splitner.pipeline.inference import predict
from splitner.pipeline.inference import predictions_by_id
from splitner.pipeline.inference import read_predictions
from splitner.pipeline.inference import write_predictions
from splitner.pipeline.synthetic import generate_synthetic_corpus
from splitner.subword import Vocab
from splitner.subword import build_vocab
from splitner.subword import surface_pieces
from splitner.subword import tokenize_word

logger = logging.getLogger(__name__)

CONFIG_COPY = "run.conf"
VOCAB_FILE = "vocab.txt"
DETECTOR_FILE = "detector.ckpt"
CLASSIFIER_FILE = "classifier.ckpt"
PREDICTIONS_FILE = "predictions.jsonl"


def _require(path_text: str, key: str) -> Path:
    if not path_text:
        raise ConfigurationError(f"config key {key!r} is required for this command")
    path = Path(path_text)
    if not path.exists():
        raise ConfigurationError(f"{key}: file not found: {path}")
    return path


def read_corpus(path_text: str, key: str) -> Dataset:
    """Parse the CoNLL file named by config key ``key``."""
    path = _require(path_text, key)
    return parse_conll(path.read_text(encoding="utf-8"))


def _vocabulary(config: RunConfig, train: Dataset, out: Path) -> Vocab:
    if config.vocab_path:
        return Vocab.load(_require(config.vocab_path, "vocab_path"))
    existing = out / VOCAB_FILE
    if existing.exists():
        return Vocab.load(existing)
    vocab = build_vocab(
        train,
        config.vocab_size,
        reserved_text=[
            *reserved_question_text(train.type_inventory),
            " ".join(question_words(config.question_text)),
        ],
        lowercase=config.lowercase,
    )
    vocab.save(existing)
    return vocab


def _write_loss_log(path: Path, history: Sequence[EpochResult]) -> None:
    path.write_text(
        "".join(f"{result.epoch}\t{result.loss!r}\n" for result in history), encoding="utf-8"
    )


def _check_training_corpus(train: Dataset) -> None:
    problems = validate_dataset(train)
    if problems:
        raise ConfigurationError(f"training corpus is invalid: {problems[0]}")


def cmd_train_detector(config: RunConfig, args: argparse.Namespace) -> int:
    """Train the detector of ``config.variant``."""
    out: Path = args.out
    train = read_corpus(config.train_path, "train_path")
    _check_training_corpus(train)
    vocab = _vocabulary(config, train, out)
    detector = VariantRegistry.get_instance().build_detector(config.variant, train, vocab, config)
    history = fit(detector, train, config)
    save_model(detector, out / DETECTOR_FILE, config.variant)
    _write_loss_log(out / "detector.loss", history)
    print(f"detector: {len(history)} epochs, final loss {history[-1].loss:.6f}")
    return 0


def cmd_train_classifier(config: RunConfig, args: argparse.Namespace) -> int:
    """Train the span classifier of a split variant."""
    out: Path = args.out
    train = read_corpus(config.train_path, "train_path")
    _check_training_corpus(train)
    vocab = _vocabulary(config, train, out)
    classifier = VariantRegistry.get_instance().build_classifier(
        config.variant, train, vocab, config
    )
    if classifier is None:
        raise ConfigurationError(f"variant {config.variant} has no span classifier")
    history = fit(classifier, train, config)
    save_model(classifier, out / CLASSIFIER_FILE, config.variant)
    _write_loss_log(out / "classifier.loss", history)
    print(f"classifier: {len(history)} epochs, final loss {history[-1].loss:.6f}")
    return 0


def check_checkpoint_matches(path: Path, config: RunConfig) -> None:
    """Refuse a checkpoint trained under another variant or sequence length.

    Raises:
        ConfigurationError: If the saved variant or max_seq_len differs from
            the run configuration
    """
    meta = read_metadata(meta_path(path))
    variant = meta.get("variant", "")
    if variant and variant != config.variant:
        raise ConfigurationError(
            f"{path} was trained for variant {variant}, config says {config.variant}"
        )
    max_seq_len = meta.get("max_seq_len", "")
    if max_seq_len and int(max_seq_len) != config.max_seq_len:
        raise ConfigurationError(
            f"{path} was trained with max_seq_len {max_seq_len}, "
            f"config says {config.max_seq_len}"
        )


def _load_bundle(config: RunConfig, out: Path) -> ModelBundle:
    detector_path = Path(config.detector_checkpoint or out / DETECTOR_FILE)
    check_checkpoint_matches(detector_path, config)
    detector = load_detector(detector_path)
    classifier = None
    if VariantRegistry.get_instance().get_spec(config.variant).needs_classifier:
        classifier_path = Path(config.classifier_checkpoint or out / CLASSIFIER_FILE)
        check_checkpoint_matches(classifier_path, config)
        classifier = load_classifier(classifier_path)
    return ModelBundle(Variant(config.variant), detector, classifier)


def cmd_predict(config: RunConfig, args: argparse.Namespace) -> int:
    """Label the test corpus and write JSON-lines predictions."""
    out: Path = args.out
    test = read_corpus(config.test_path, "test_path")
    bundle = _load_bundle(config, out)
    predictions = predict(bundle, test.sentences, config.batch_size)
    path = Path(config.prediction_path) if config.prediction_path else out / PREDICTIONS_FILE
    write_predictions(path, test.sentences, predictions)
    print(f"predicted {sum(len(row) for row in predictions)} mentions in {len(test)} sentences")
    return 0


def cmd_evaluate(config: RunConfig, args: argparse.Namespace) -> int:
    """Score predictions against the gold corpus."""
    out: Path = args.out
    gold = read_corpus(config.gold_path or config.test_path, "gold_path")
    predictions_path = _require(
        config.prediction_path or str(out / PREDICTIONS_FILE), "prediction_path"
    )
    predicted = predictions_by_id(read_predictions(predictions_path))
    typed = micro_f1(gold.gold, predicted, mode="typed")
    untyped = micro_f1(gold.gold, predicted, mode="untyped")
    (out / "eval.json").write_text(
        json.dumps(
            {"typed": typed.model_dump(), "untyped": untyped.model_dump()}, indent=2
        )
        + "\n",
        encoding="utf-8",
    )
    sys.stdout.write(render_eval_table(typed))
    print(f"untyped F1={untyped.f1:.3f}")
    print(f"F1={typed.f1:.3f}")
    return 0


def _benchmark_corpora(config: RunConfig) -> tuple[Dataset, Dataset]:
    if config.train_path and config.test_path:
        train = read_corpus(config.train_path, "train_path")
        test = read_corpus(config.test_path, "test_path")
        return train, test.with_type_inventory(train.type_inventory)
    train = generate_synthetic_corpus(
        config.seed, config.synthetic_sentences, config.synthetic_types, config.synthetic_density
    )
    test = generate_synthetic_corpus(
        config.seed + 1,
        config.synthetic_sentences,
        config.synthetic_types,
        config.synthetic_density,
    )
    return train, test


def cmd_benchmark(config: RunConfig, args: argparse.Namespace) -> int:
    """Time training and inference of the configured variants."""
    out: Path = args.out
    train, test = _benchmark_corpora(config)
    vocab = _vocabulary(config, train, out)
    report = benchmark(config.benchmark_variants, train, test, vocab, config)
    (out / "bench.json").write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    sys.stdout.write(render_bench_table(report))
    return 0


def cmd_featurize(config: RunConfig, args: argparse.Namespace) -> int:
    """Dump tokenizations and orthographic patterns for inspection."""
    out: Path = args.out
    corpus = read_corpus(config.test_path or config.train_path, "test_path")
    vocab = _vocabulary(config, corpus, out)
    lines = ["sentence\tword\tsubtokens\tpatterns\n"]
    for sentence in corpus.sentences:
        for word in sentence.words:
            pieces = tokenize_word(word, vocab, config.lowercase)
            patterns = [pattern_of(piece) for piece in surface_pieces(word, pieces)]
            lines.append(f"{sentence.id}\t{word}\t{' '.join(pieces)}\t{' '.join(patterns)}\n")
    path = out / "features.tsv"
    path.write_text("".join(lines), encoding="utf-8")
    print(f"wrote {len(lines) - 1} words to {path}")
    return 0


def cmd_gen_synthetic(config: RunConfig, args: argparse.Namespace) -> int:
    """Write a synthetic CoNLL corpus."""
    out: Path = args.out
    dataset = generate_synthetic_corpus(
        config.seed, config.synthetic_sentences, config.synthetic_types, config.synthetic_density
    )
    path = out / "synthetic.conll"
    path.write_text(serialize_conll(dataset), encoding="utf-8")
    print(f"wrote {len(dataset)} sentences with {dataset.num_mentions} mentions to {path}")
    return 0


COMMANDS: dict[str, Callable[[RunConfig, argparse.Namespace], int]] = {
    "train-detector": cmd_train_detector,
    "train-classifier": cmd_train_classifier,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "benchmark": cmd_benchmark,
    "featurize": cmd_featurize,
    "gen-synthetic": cmd_gen_synthetic,
}


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per entry of ``COMMANDS``."""
    parser = argparse.ArgumentParser(
        prog="splitner", description="Two-step named entity recognition"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level", default=None, help="override SPLITNER_LOG_LEVEL (debug, info, warning, ...)"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, handler in COMMANDS.items():
        sub = subparsers.add_parser(name, help=(handler.__doc__ or "").strip())
        sub.add_argument("--config", type=Path, required=True, help="key=value run file")
        sub.add_argument("--out", type=Path, default=Path("."), help="output directory")
        sub.add_argument("--seed", type=int, default=None, help="override the config seed")
        if name == "benchmark":
            sub.add_argument("--runs", type=int, default=None, help="repetitions per variant")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Run the command line.

    Args:
        argv: Arguments without the program name (defaults to sys.argv)

    Returns:
        Exit code: 0 on success, 1 on any handled error
    """
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    torch.set_num_threads(get_config().torch_threads)
    try:
        config = RunConfig.load(args.config).with_overrides(
            seed=args.seed, benchmark_runs=getattr(args, "runs", None)
        )
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / CONFIG_COPY).write_text(config.dump(), encoding="utf-8")
        logger.info(f"Running {args.command} with {args.config}")
        return COMMANDS[args.command](config, args)
    except (SplitNerException, OSError) as e:
        print(f"splitner {args.command}: error: {e}", file=sys.stderr)
        return 1
