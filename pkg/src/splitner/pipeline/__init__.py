"""Inference, evaluation, benchmarking and synthetic corpora."""

from splitner.pipeline.benchmark import BenchReport
from splitner.pipeline.benchmark import QueryKind
from splitner.pipeline.benchmark import benchmark
from splitner.pipeline.benchmark import count_queries
from splitner.pipeline.evaluation import EvalReport
from splitner.pipeline.evaluation import micro_f1
from splitner.pipeline.evaluation import summarize_runs
from splitner.pipeline.inference import evaluate_classifier
from splitner.pipeline.inference import predict
from splitner.pipeline.inference import read_predictions
from splitner.pipeline.inference import run_pipeline
from splitner.pipeline.inference import write_predictions
from splitner.pipeline.synthetic import SurfaceFamily
from splitner.pipeline.synthetic import generate_synthetic_corpus
from splitner.pipeline.synthetic import parse_type_spec

__all__ = [
    "BenchReport",
    "EvalReport",
    "QueryKind",
    "SurfaceFamily",
    "benchmark",
    "count_queries",
    "evaluate_classifier",
    "generate_synthetic_corpus",
    "micro_f1",
    "parse_type_spec",
    "predict",
    "read_predictions",
    "run_pipeline",
    "summarize_runs",
    "write_predictions",
]
