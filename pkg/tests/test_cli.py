"""Tests for the command-line entry point."""

import json
import logging
from pathlib import Path

import pytest
from pytest_mock import MockerFixture

from splitner.cli import check_checkpoint_matches
from splitner.cli import main
from splitner.config import RunConfig
from splitner.config import reload_config
from splitner.corpus import Dataset
from splitner.corpus import parse_conll
from splitner.corpus import serialize_conll
from splitner.exceptions import ConfigurationError
from splitner.models.base import ScoredMention
from splitner.models.inputs import reserved_question_text
from splitner.models.persistence import save_model
from splitner.models.variants import VariantRegistry
from splitner.pipeline.benchmark import BenchReport
from splitner.pipeline.inference import write_predictions
from splitner.pipeline.synthetic import generate_synthetic_corpus
from splitner.subword import build_vocab

SMALL_MODEL = (
    "encoder_layers = 1\n"
    "encoder_heads = 2\n"
    "encoder_hidden = 16\n"
    "encoder_ff = 32\n"
    "max_seq_len = 64\n"
    "dropout = 0.0\n"
    "batch_size = 4\n"
    "epochs = 2\n"
    "lr = 0.001\n"
    "vocab_size = 200\n"
)


def _write_config(directory: Path, text: str) -> Path:
    path = directory / "run.txt"
    path.write_text(text, encoding="utf-8")
    return path


def test_gen_synthetic(temp_dir: Path, capsys: pytest.CaptureFixture[str]) -> None:
    """Test corpus generation and the canonical config copy."""
    config = _write_config(temp_dir, "synthetic_sentences = 20\nseed = 3\n")
    out = temp_dir / "out"

    assert main(["gen-synthetic", "--config", str(config), "--out", str(out)]) == 0

    dataset = parse_conll((out / "synthetic.conll").read_text(encoding="utf-8"))
    assert len(dataset) == 20
    assert dataset.num_mentions == 40
    copy = RunConfig.from_text((out / "run.conf").read_text(encoding="utf-8"))
    assert copy == RunConfig(synthetic_sentences=20, seed=3)
    assert "20 sentences" in capsys.readouterr().out


def test_seed_flag_overrides_config(temp_dir: Path) -> None:
    """Test that --seed replaces the configured seed."""
    config = _write_config(temp_dir, "synthetic_sentences = 5\nseed = 3\n")

    args = ["gen-synthetic", "--config", str(config), "--out", str(temp_dir), "--seed", "9"]
    assert main(args) == 0

    assert "seed = 9\n" in (temp_dir / "run.conf").read_text(encoding="utf-8")
    expected = serialize_conll(generate_synthetic_corpus(9, 5, RunConfig().synthetic_types))
    assert (temp_dir / "synthetic.conll").read_text(encoding="utf-8") == expected


def test_unknown_config_key_fails(temp_dir: Path, capsys: pytest.CaptureFixture[str]) -> None:
    """Test that an unknown key exits 1 with a message on stderr."""
    config = _write_config(temp_dir, "foo = 1\n")

    assert main(["evaluate", "--config", str(config), "--out", str(temp_dir)]) == 1

    err = capsys.readouterr().err
    assert "splitner evaluate: error:" in err
    assert "foo" in err


def test_missing_corpus_fails(temp_dir: Path, capsys: pytest.CaptureFixture[str]) -> None:
    """Test that a command without its input corpus exits 1."""
    config = _write_config(temp_dir, "")

    assert main(["predict", "--config", str(config), "--out", str(temp_dir)]) == 1

    assert "test_path" in capsys.readouterr().err


def test_evaluate_gold_as_predictions(
    temp_dir: Path, emily_conll: str, capsys: pytest.CaptureFixture[str]
) -> None:
    """Test that gold mentions used as predictions score 1."""
    gold_path = temp_dir / "gold.conll"
    gold_path.write_text(emily_conll, encoding="utf-8")
    gold = parse_conll(emily_conll)
    write_predictions(
        temp_dir / "predictions.jsonl",
        gold.sentences,
        [[ScoredMention(m, 1.0) for m in gold.mentions(s)] for s in gold.sentences],
    )
    config = _write_config(temp_dir, f"test_path = {gold_path}\n")

    assert main(["evaluate", "--config", str(config), "--out", str(temp_dir)]) == 0

    lines = capsys.readouterr().out.splitlines()
    assert lines[-1] == "F1=1.000"
    assert lines[-2] == "untyped F1=1.000"
    report = json.loads((temp_dir / "eval.json").read_text(encoding="utf-8"))
    assert report["typed"]["f1"] == 1.0
    assert report["typed"]["tp"] == 4


def test_featurize(temp_dir: Path, emily_conll: str) -> None:
    """Test the per-word feature dump."""
    corpus = temp_dir / "test.conll"
    corpus.write_text(emily_conll, encoding="utf-8")
    config = _write_config(temp_dir, f"test_path = {corpus}\nvocab_size = 200\n")

    assert main(["featurize", "--config", str(config), "--out", str(temp_dir)]) == 0

    rows = (temp_dir / "features.tsv").read_text(encoding="utf-8").splitlines()
    assert rows[0] == "sentence\tword\tsubtokens\tpatterns"
    assert len(rows) == 1 + 9
    assert rows[1].split("\t")[:2] == ["0", "Emily"]
    assert rows[7].split("\t")[:2] == ["1", "hired"]
    assert (temp_dir / "vocab.txt").exists()


@pytest.mark.slow
def test_training_is_reproducible(temp_dir: Path) -> None:
    """Test byte-identical loss logs for two runs with one seed."""
    train = temp_dir / "train.conll"
    train.write_text(
        serialize_conll(generate_synthetic_corpus(0, 8, RunConfig().synthetic_types)),
        encoding="utf-8",
    )
    config = _write_config(temp_dir, SMALL_MODEL + f"train_path = {train}\nseed = 5\n")

    for name in ("a", "b"):
        args = ["train-detector", "--config", str(config), "--out", str(temp_dir / name)]
        assert main(args) == 0

    first = (temp_dir / "a" / "detector.loss").read_bytes()
    assert first == (temp_dir / "b" / "detector.loss").read_bytes()
    assert len(first.splitlines()) == 2


@pytest.mark.slow
def test_split_pipeline_end_to_end(temp_dir: Path, capsys: pytest.CaptureFixture[str]) -> None:
    """Test training, prediction and scoring of the split variant."""
    types = RunConfig().synthetic_types
    train = temp_dir / "train.conll"
    test = temp_dir / "test.conll"
    train.write_text(serialize_conll(generate_synthetic_corpus(0, 8, types)), encoding="utf-8")
    test.write_text(serialize_conll(generate_synthetic_corpus(1, 4, types)), encoding="utf-8")
    config = _write_config(
        temp_dir, SMALL_MODEL + f"train_path = {train}\ntest_path = {test}\n"
    )
    out = temp_dir / "out"

    for command in ("train-detector", "train-classifier", "predict", "evaluate"):
        assert main([command, "--config", str(config), "--out", str(out)]) == 0

    assert (out / "detector.ckpt").exists()
    assert (out / "classifier.ckpt").exists()
    assert (out / "predictions.jsonl").exists()
    report = json.loads((out / "eval.json").read_text(encoding="utf-8"))
    assert 0.0 <= report["typed"]["f1"] <= 1.0
    assert capsys.readouterr().out.splitlines()[-1].startswith("F1=")


@pytest.mark.slow
def test_benchmark_command(temp_dir: Path) -> None:
    """Test the benchmark report on a synthetic corpus."""
    config = _write_config(
        temp_dir,
        SMALL_MODEL + "synthetic_sentences = 4\nbenchmark_variants = split_qa_qa,single_qa\n",
    )

    args = ["benchmark", "--config", str(config), "--out", str(temp_dir), "--runs", "1"]
    assert main(args) == 0

    report = json.loads((temp_dir / "bench.json").read_text(encoding="utf-8"))
    assert [entry["variant"] for entry in report["variants"]] == ["split_qa_qa", "single_qa"]
    assert report["types"] == 4


def test_benchmark_forwards_runs(temp_dir: Path, mocker: MockerFixture) -> None:
    """Test that --runs reaches the benchmark harness."""
    report = BenchReport(train_sentences=4, test_sentences=4, types=4, variants=[])
    run = mocker.patch("splitner.cli.benchmark", return_value=report)
    config = _write_config(temp_dir, "synthetic_sentences = 4\n")

    args = ["benchmark", "--config", str(config), "--out", str(temp_dir), "--runs", "3"]
    assert main(args) == 0

    assert run.call_args.args[4].benchmark_runs == 3
    assert run.call_args.args[0] == ["split_qa_qa", "single_qa"]
    assert json.loads((temp_dir / "bench.json").read_text(encoding="utf-8"))["types"] == 4


@pytest.mark.parametrize("runs", ["0", "-1"])
def test_benchmark_rejects_non_positive_runs(
    temp_dir: Path, capsys: pytest.CaptureFixture[str], runs: str
) -> None:
    """Test that a non-positive --runs is a handled configuration error."""
    config = _write_config(temp_dir, "synthetic_sentences = 4\n")

    args = ["benchmark", "--config", str(config), "--out", str(temp_dir), "--runs", runs]
    assert main(args) == 1

    err = capsys.readouterr().err
    assert "splitner benchmark: error:" in err
    assert "benchmark_runs" in err


def test_log_level_flag(temp_dir: Path) -> None:
    """Test that --log-level overrides the configured level."""
    config = _write_config(temp_dir, "synthetic_sentences = 2\n")

    args = ["--log-level", "warning", "gen-synthetic", "--config", str(config)]
    assert main([*args, "--out", str(temp_dir)]) == 0

    assert logging.getLogger().level == logging.WARNING


def test_main_applies_torch_threads(
    temp_dir: Path, monkeypatch: pytest.MonkeyPatch, mocker: MockerFixture
) -> None:
    """Test that the thread count comes from the settings, once, at start-up."""
    monkeypatch.setenv("SPLITNER_TORCH_THREADS", "3")
    reload_config()
    set_threads = mocker.patch("splitner.cli.torch.set_num_threads")
    config = _write_config(temp_dir, "synthetic_sentences = 2\n")

    assert main(["gen-synthetic", "--config", str(config), "--out", str(temp_dir)]) == 0

    set_threads.assert_called_once_with(3)


def _saved_split_models(directory: Path, train: Dataset) -> None:
    config = RunConfig.from_text(SMALL_MODEL)
    vocab = build_vocab(train, 200, reserved_text=reserved_question_text(train.type_inventory))
    bundle = VariantRegistry.get_instance().build_models("split_qa_qa", train, vocab, config)
    assert bundle.classifier is not None
    directory.mkdir(parents=True, exist_ok=True)
    save_model(bundle.detector, directory / "detector.ckpt", "split_qa_qa")
    save_model(bundle.classifier, directory / "classifier.ckpt", "split_qa_qa")


@pytest.mark.parametrize(
    ("override", "message"),
    [
        ("variant = single_seqtag\n", "trained for variant split_qa_qa"),
        ("variant = split_qa_qa\nmax_seq_len = 128\n", "trained with max_seq_len 64"),
    ],
)
def test_predict_rejects_mismatched_checkpoint(
    temp_dir: Path,
    emily_conll: str,
    tiny_dataset: Dataset,
    capsys: pytest.CaptureFixture[str],
    override: str,
    message: str,
) -> None:
    """Test that a checkpoint saved under another variant or length is refused."""
    out = temp_dir / "out"
    _saved_split_models(out, tiny_dataset)
    test = temp_dir / "test.conll"
    test.write_text(emily_conll, encoding="utf-8")
    text = SMALL_MODEL
    if "max_seq_len" in override:
        text = text.replace("max_seq_len = 64\n", "")
    config = _write_config(temp_dir, text + f"test_path = {test}\n" + override)

    assert main(["predict", "--config", str(config), "--out", str(out)]) == 1

    assert message in capsys.readouterr().err
    assert not (out / "predictions.jsonl").exists()


def test_check_checkpoint_matches(temp_dir: Path, tiny_dataset: Dataset) -> None:
    """Test the checkpoint guard directly."""
    _saved_split_models(temp_dir, tiny_dataset)
    config = RunConfig.from_text(SMALL_MODEL)

    check_checkpoint_matches(temp_dir / "detector.ckpt", config)
    check_checkpoint_matches(temp_dir / "classifier.ckpt", config)
    with pytest.raises(ConfigurationError, match="single_qa"):
        check_checkpoint_matches(
            temp_dir / "detector.ckpt", config.with_overrides(variant="single_qa")
        )
