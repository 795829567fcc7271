"""Tests for parameter stores and the binary checkpoint format."""

import struct
from pathlib import Path

import pytest
import torch
from torch import nn

from splitner.exceptions import CheckpointError
from splitner.nn.checkpoint import MAGIC
from splitner.nn.checkpoint import SEED_RECORD
from splitner.nn.checkpoint import ParamStore
from splitner.nn.checkpoint import decode_checkpoint
from splitner.nn.checkpoint import encode_checkpoint
from splitner.nn.checkpoint import load_checkpoint
from splitner.nn.checkpoint import save_checkpoint


def _store() -> ParamStore:
    return ParamStore(
        tensors={
            "w": torch.tensor([0.1, -2.5]),
            "layer.weight": torch.arange(6, dtype=torch.float32).reshape(2, 3) / 7,
            "scale": torch.tensor(3.0),
        },
        rng_seed=42,
    )


def test_encode_decode_is_bit_exact() -> None:
    """Test that names, shapes, values and seed survive."""
    store = _store()

    decoded = decode_checkpoint(encode_checkpoint(store))

    assert list(decoded.tensors) == list(store.tensors)
    for name, tensor in store.tensors.items():
        assert torch.equal(decoded.tensors[name], tensor)
    assert decoded.rng_seed == 42
    assert decoded.num_parameters == 2 + 6 + 1


def test_save_and_load(temp_dir: Path) -> None:
    """Test file round trip and the expected-names filter."""
    path = temp_dir / "model.ckpt"

    save_checkpoint(_store(), path)

    assert path.read_bytes().startswith(MAGIC)
    assert load_checkpoint(path, ["w", "layer.weight", "scale"]).rng_seed == 42
    with pytest.raises(CheckpointError, match="unknown tensors"):
        load_checkpoint(path, ["w"])


def test_load_missing_file(temp_dir: Path) -> None:
    """Test that unreadable files are checkpoint errors."""
    with pytest.raises(CheckpointError, match="cannot read"):
        load_checkpoint(temp_dir / "missing.ckpt")


@pytest.mark.parametrize(
    ("data", "message"),
    [
        (b"PK\x03\x04", "not a splitner checkpoint"),
        (b"SPNER2" + bytes(8), "unsupported checkpoint version"),
        (MAGIC, "truncated"),
    ],
)
def test_decode_rejects_foreign_data(data: bytes, message: str) -> None:
    """Test magic and version checks."""
    with pytest.raises(CheckpointError, match=message):
        decode_checkpoint(data)


def test_decode_rejects_truncation() -> None:
    """Test that a cut file is detected."""
    data = encode_checkpoint(ParamStore({"w": torch.tensor([1.0, 2.0])}, rng_seed=1))

    with pytest.raises(CheckpointError, match="truncated"):
        decode_checkpoint(data[:-5])


def test_seed_record_name_is_reserved() -> None:
    """Test that the seed record name cannot be used for a tensor."""
    with pytest.raises(CheckpointError, match="reserved"):
        encode_checkpoint(ParamStore({SEED_RECORD: torch.zeros(1)}))


def test_apply_to_module() -> None:
    """Test loading a store into a module of the same structure."""
    torch.manual_seed(0)
    source = nn.Linear(2, 3)
    target = nn.Linear(2, 3)

    ParamStore.from_module(source, seed=5).apply_to(target)

    assert torch.equal(source.weight, target.weight)
    assert torch.equal(source.bias, target.bias)


def test_apply_to_mismatched_module() -> None:
    """Test that missing and mis-shaped tensors are rejected."""
    store = ParamStore.from_module(nn.Linear(2, 3))

    with pytest.raises(CheckpointError, match="shape mismatch"):
        store.apply_to(nn.Linear(2, 4))
    with pytest.raises(CheckpointError, match="missing"):
        store.apply_to(nn.Sequential(nn.Linear(2, 3)))


@pytest.mark.parametrize("dims", [(2**62, 8), (2**40, 2**40), (3, 5)])
def test_decode_rejects_shapes_larger_than_the_data(dims: tuple[int, ...]) -> None:
    """Test that oversized or overflowing shapes are reported as corrupt."""
    u64 = struct.Struct("<Q")
    record = u64.pack(1) + b"w" + u64.pack(len(dims)) + b"".join(u64.pack(d) for d in dims)
    data = MAGIC + record + b"\x00" * 8 + u64.pack(1)

    with pytest.raises(CheckpointError, match="truncated"):
        decode_checkpoint(data)
