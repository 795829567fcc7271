"""Named parameter stores and the binary checkpoint format.

Layout (all integers unsigned 64-bit little-endian)::

    b"SPNER1"
    repeated: name_length, name (UTF-8), rank, dims[rank], float32 data (LE)
    record_count

The run seed travels as a reserved zero-element record named
``__rng_seed__`` whose shape is ``(0, seed)``.
"""

import logging
import math
import struct
from collections.abc import Iterable
from dataclasses import dataclass
from dataclasses import field
from pathlib import Path

import numpy as np
import torch
from torch import Tensor
from torch import nn

from splitner.exceptions import CheckpointError

logger = logging.getLogger(__name__)

MAGIC = b"SPNER1"
MAGIC_FAMILY = b"SPNER"
SEED_RECORD = "__rng_seed__"
_U64 = struct.Struct("<Q")


@dataclass
class ParamStore:
    """Ordered mapping of parameter names to tensors, plus the run seed."""

    tensors: dict[str, Tensor] = field(default_factory=dict)
    rng_seed: int = 0

    @classmethod
    def from_module(cls, module: nn.Module, seed: int = 0) -> "ParamStore":
        """Snapshot the state of ``module``.

        Args:
            module: Source module
            seed: Seed the module was initialized and trained with

        Returns:
            ParamStore holding detached float32 copies
        """
        tensors = {
            name: tensor.detach().to(torch.float32).clone()
            for name, tensor in module.state_dict().items()
        }
        return cls(tensors=tensors, rng_seed=seed)

    def apply_to(self, module: nn.Module) -> None:
        """Load this store into ``module``.

        Args:
            module: Target module with exactly matching names and shapes

        Raises:
            CheckpointError: On missing, unknown or mis-shaped tensors
        """
        expected = module.state_dict()
        missing = sorted(set(expected) - set(self.tensors))
        unknown = sorted(set(self.tensors) - set(expected))
        if missing or unknown:
            raise CheckpointError(
                f"checkpoint does not match model: missing {missing}, unknown {unknown}"
            )
        for name, tensor in self.tensors.items():
            if tuple(tensor.shape) != tuple(expected[name].shape):
                raise CheckpointError(
                    f"shape mismatch for {name}: checkpoint {tuple(tensor.shape)}, "
                    f"model {tuple(expected[name].shape)}"
                )
        module.load_state_dict(
            {name: tensor.to(expected[name].dtype) for name, tensor in self.tensors.items()}
        )

    @property
    def num_parameters(self) -> int:
        """Total number of scalars."""
        return sum(tensor.numel() for tensor in self.tensors.values())


def _record(name: str, dims: tuple[int, ...], data: bytes) -> bytes:
    encoded = name.encode("utf-8")
    parts = [_U64.pack(len(encoded)), encoded, _U64.pack(len(dims))]
    parts.extend(_U64.pack(dim) for dim in dims)
    parts.append(data)
    return b"".join(parts)


def encode_checkpoint(store: ParamStore) -> bytes:
    """Serialize a store to bytes."""
    if SEED_RECORD in store.tensors:
        raise CheckpointError(f"tensor name {SEED_RECORD!r} is reserved")
    records = [_record(SEED_RECORD, (0, store.rng_seed), b"")]
    for name, tensor in store.tensors.items():
        array = tensor.detach().cpu().to(torch.float32).contiguous().numpy()
        records.append(_record(name, tuple(array.shape), array.astype("<f4").tobytes()))
    return MAGIC + b"".join(records) + _U64.pack(len(records))


def decode_checkpoint(data: bytes) -> ParamStore:
    """Parse bytes produced by :func:`encode_checkpoint`.

    Raises:
        CheckpointError: On a foreign or newer format, or truncation
    """
    if not data.startswith(MAGIC):
        if data.startswith(MAGIC_FAMILY):
            raise CheckpointError(
                f"unsupported checkpoint version {data[:len(MAGIC)]!r}, expected {MAGIC!r}"
            )
        raise CheckpointError("not a splitner checkpoint")
    if len(data) < len(MAGIC) + _U64.size:
        raise CheckpointError("checkpoint is truncated")

    end = len(data) - _U64.size
    (declared,) = _U64.unpack_from(data, end)
    offset = len(MAGIC)

    def take(size: int) -> bytes:
        nonlocal offset
        if offset + size > end:
            raise CheckpointError("checkpoint is truncated")
        chunk = data[offset : offset + size]
        offset += size
        return chunk

    def take_u64() -> int:
        return int(_U64.unpack(take(_U64.size))[0])

    store = ParamStore()
    count = 0
    while offset < end:
        name_length = take_u64()
        try:
            name = take(name_length).decode("utf-8")
        except UnicodeDecodeError as e:
            raise CheckpointError(f"corrupt tensor name: {e}") from e
        rank = take_u64()
        if rank > 16:
            raise CheckpointError(f"implausible rank {rank} for {name!r}")
        dims = tuple(take_u64() for _ in range(rank))
        count += 1
        if name == SEED_RECORD:
            store.rng_seed = dims[1] if len(dims) == 2 else 0
            continue
        numel = math.prod(dims)
        if numel * 4 > end - offset:
            raise CheckpointError(f"checkpoint is truncated: {name!r} declares shape {dims}")
        raw = take(numel * 4)
        try:
            array = np.frombuffer(raw, dtype="<f4").reshape(dims).astype(np.float32)
        except (ValueError, OverflowError) as e:
            raise CheckpointError(f"corrupt shape {dims} for {name!r}: {e}") from e
        if name in store.tensors:
            raise CheckpointError(f"duplicate tensor {name!r}")
        store.tensors[name] = torch.from_numpy(array.copy())

    if count != declared:
        raise CheckpointError(
            f"checkpoint declares {declared} records but contains {count} (truncated?)"
        )
    return store


def save_checkpoint(store: ParamStore, path: Path) -> None:
    """Write ``store`` to ``path``.

    Args:
        store: Parameters to save
        path: Destination file
    """
    path.write_bytes(encode_checkpoint(store))
    logger.info(
        f"Saved checkpoint {path} ({len(store.tensors)} tensors, "
        f"{store.num_parameters} parameters)"
    )


def load_checkpoint(path: Path, expected_names: Iterable[str] | None = None) -> ParamStore:
    """Read a checkpoint file.

    Args:
        path: Checkpoint file
        expected_names: When given, tensors outside this set are rejected

    Returns:
        ParamStore

    Raises:
        CheckpointError: If the file is unreadable, malformed, or holds
            unknown tensors
    """
    try:
        data = path.read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    store = decode_checkpoint(data)
    if expected_names is not None:
        unknown = sorted(set(store.tensors) - set(expected_names))
        if unknown:
            raise CheckpointError(f"unknown tensors in {path}: {', '.join(unknown)}")
    return store
