"""Saving and restoring task models.

A model is stored as three files sharing a stem::

    detector.ckpt         parameters (binary checkpoint format)
    detector.ckpt.meta    key=value description needed to rebuild the model
    detector.ckpt.vocab   subword vocabulary, one entry per line
"""

import logging
from pathlib import Path

from splitner.corpus import TagSet
from splitner.exceptions import CheckpointError
from splitner.exceptions import ModelMismatchError
from splitner.models.base import TaskModel
from splitner.models.classifier import ClassifierModel
from splitner.models.detector import DetectorModel
from splitner.models.detector import Framing
from splitner.models.encoder import EncoderConfig
from splitner.nn import ParamStore
from splitner.nn import load_checkpoint
from splitner.nn import save_checkpoint
from splitner.subword import Vocab

logger = logging.getLogger(__name__)

META_SUFFIX = ".meta"
VOCAB_SUFFIX = ".vocab"


def meta_path(path: Path) -> Path:
    """Sidecar metadata file of a checkpoint."""
    return path.with_name(path.name + META_SUFFIX)


def vocab_path(path: Path) -> Path:
    """Sidecar vocabulary file of a checkpoint."""
    return path.with_name(path.name + VOCAB_SUFFIX)


def _render(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (tuple, list)):
        items = [str(item) for item in value]
        if any("," in item for item in items):
            raise CheckpointError(f"list values may not contain commas: {items}")
        return ",".join(items)
    text = str(value)
    if "\n" in text:
        raise CheckpointError(f"metadata values must be single-line: {text!r}")
    return text


def _list(value: str) -> tuple[str, ...]:
    return tuple(value.split(",")) if value else ()


def _bool(value: str) -> bool:
    return value == "true"


def model_metadata(model: TaskModel, variant: str = "") -> dict[str, str]:
    """Key=value description of a model.

    Args:
        model: Detector or classifier
        variant: Name of the variant the model belongs to

    Returns:
        Ordered metadata mapping
    """
    encoder = model.encoder_config
    meta: dict[str, object] = {
        "kind": model.kind,
        "variant": variant,
        "seed": model.seed,
        "lowercase": model.lowercase,
        "encoder_layers": encoder.layers,
        "encoder_heads": encoder.heads,
        "encoder_hidden": encoder.hidden_dim,
        "encoder_ff": encoder.ff_dim,
        "max_seq_len": encoder.max_seq_len,
        "dropout": encoder.dropout,
    }
    if isinstance(model, DetectorModel):
        meta.update(
            framing=model.framing.value,
            question=model.question,
            tagset=model.tagset.labels,
            entity_types=model.entity_types,
            use_char=model.use_char,
            use_pattern=model.use_pattern,
        )
    elif isinstance(model, ClassifierModel):
        meta.update(
            entity_types=model.entity_types,
            loss=model.loss,
            gamma=model.gamma,
        )
    return {key: _render(value) for key, value in meta.items()}


def read_metadata(path: Path) -> dict[str, str]:
    """Parse a metadata sidecar.

    Raises:
        CheckpointError: If the file is missing or malformed
    """
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise CheckpointError(f"cannot read model metadata {path}: {e}") from e
    meta: dict[str, str] = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        key, separator, value = line.partition(" = ")
        if not separator:
            raise CheckpointError(f"malformed metadata line in {path}: {line!r}")
        meta[key] = value
    return meta


def save_model(model: TaskModel, path: Path, variant: str = "") -> None:
    """Write a model's checkpoint, metadata and vocabulary.

    Args:
        model: Detector or classifier
        path: Checkpoint file; sidecars are written next to it
        variant: Name of the variant the model belongs to
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(ParamStore.from_module(model, model.seed), path)
    meta = model_metadata(model, variant)
    meta_path(path).write_text(
        "".join(f"{key} = {value}\n" for key, value in meta.items()), encoding="utf-8"
    )
    model.vocab.save(vocab_path(path))
    logger.info(f"Saved {model.kind} to {path}")


def _encoder_config(meta: dict[str, str]) -> EncoderConfig:
    return EncoderConfig(
        layers=int(meta["encoder_layers"]),
        heads=int(meta["encoder_heads"]),
        hidden_dim=int(meta["encoder_hidden"]),
        ff_dim=int(meta["encoder_ff"]),
        max_seq_len=int(meta["max_seq_len"]),
        dropout=float(meta["dropout"]),
    )


def _rebuild(meta: dict[str, str], vocab: Vocab) -> TaskModel:
    encoder = _encoder_config(meta)
    seed = int(meta["seed"])
    lowercase = _bool(meta["lowercase"])
    if meta["kind"] == DetectorModel.kind:
        return DetectorModel(
            vocab,
            TagSet(_list(meta["tagset"])),
            encoder,
            framing=Framing(meta["framing"]),
            question=meta["question"],
            entity_types=_list(meta["entity_types"]),
            use_char=_bool(meta["use_char"]),
            use_pattern=_bool(meta["use_pattern"]),
            lowercase=lowercase,
            seed=seed,
        )
    if meta["kind"] == ClassifierModel.kind:
        loss = meta["loss"]
        if loss not in ("dice", "cross_entropy"):
            raise CheckpointError(f"unknown classifier loss {loss!r}")
        return ClassifierModel(
            vocab,
            _list(meta["entity_types"]),
            encoder,
            loss="dice" if loss == "dice" else "cross_entropy",
            gamma=float(meta["gamma"]),
            lowercase=lowercase,
            seed=seed,
        )
    raise CheckpointError(f"unknown model kind {meta['kind']!r}")


def load_model(path: Path) -> TaskModel:
    """Rebuild a model saved by :func:`save_model`.

    Args:
        path: Checkpoint file

    Returns:
        Model in inference mode

    Raises:
        CheckpointError: If any file is missing or the parameters do not fit
            the described architecture
    """
    meta = read_metadata(meta_path(path))
    try:
        vocab = Vocab.load(vocab_path(path))
        model = _rebuild(meta, vocab)
    except (KeyError, ValueError) as e:
        raise CheckpointError(f"invalid model metadata for {path}: {e}") from e
    store = load_checkpoint(path, expected_names=model.state_dict().keys())
    if store.rng_seed != model.seed:
        raise CheckpointError(
            f"checkpoint seed {store.rng_seed} differs from metadata seed {model.seed}"
        )
    store.apply_to(model)
    model.eval()
    logger.info(f"Loaded {model.kind} from {path}")
    return model


def load_detector(path: Path) -> DetectorModel:
    """Load a model and require it to be a detector."""
    model = load_model(path)
    if not isinstance(model, DetectorModel):
        raise ModelMismatchError(f"{path} holds a {model.kind}, expected a detector")
    return model


def load_classifier(path: Path) -> ClassifierModel:
    """Load a model and require it to be a span classifier."""
    model = load_model(path)
    if not isinstance(model, ClassifierModel):
        raise ModelMismatchError(f"{path} holds a {model.kind}, expected a classifier")
    return model


def saved_variant(path: Path) -> str:
    """Variant name recorded next to a checkpoint (may be empty)."""
    return read_metadata(meta_path(path)).get("variant", "")
