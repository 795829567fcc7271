"""Task models: span detector, span classifier and the variants built from them."""

from splitner.models.base import ScoredMention
from splitner.models.base import TaskModel
from splitner.models.classifier import ClassifierModel
from splitner.models.classifier import classify_span
from splitner.models.classifier import classify_spans
from splitner.models.detector import DetectorModel
from splitner.models.detector import Framing
from splitner.models.detector import detect_scored_spans
from splitner.models.detector import detect_spans
from splitner.models.detector import detector_forward
from splitner.models.encoder import EncoderConfig
from splitner.models.encoder import TransformerEncoder
from splitner.models.inputs import ModelInput
from splitner.models.inputs import build_classification_input
from splitner.models.inputs import build_detection_input
from splitner.models.persistence import load_model
from splitner.models.persistence import save_model
from splitner.models.training import EpochResult
from splitner.models.training import fit
from splitner.models.training import train_epoch
from splitner.models.variants import ModelBundle
from splitner.models.variants import Variant
from splitner.models.variants import VariantRegistry
from splitner.models.variants import single_qa_variant
from splitner.models.variants import single_seqtag_variant

__all__ = [
    "ClassifierModel",
    "DetectorModel",
    "EncoderConfig",
    "EpochResult",
    "Framing",
    "ModelBundle",
    "ModelInput",
    "ScoredMention",
    "TaskModel",
    "TransformerEncoder",
    "Variant",
    "VariantRegistry",
    "build_classification_input",
    "build_detection_input",
    "classify_span",
    "classify_spans",
    "detect_scored_spans",
    "detect_spans",
    "detector_forward",
    "fit",
    "load_model",
    "save_model",
    "single_qa_variant",
    "single_seqtag_variant",
    "train_epoch",
]
