"""Neutral on-disk format for trained weights.

An archive is a directory holding ``manifest.json``::

    {"layers": [{"name": "conv1", "kind": "conv", "shape": [16, 3, 3, 3], "file": "conv1.bin"}, ...]}

and one headerless ``.bin`` per layer containing row-major little-endian
float32 values (exactly ``4 * prod(shape)`` bytes).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = ["ArchiveError", "Layer", "TensorArchive", "read_tensor_archive", "write_tensor_archive", "LAYER_KINDS"]

LAYER_KINDS = ("dense", "conv", "bias", "other")
_DTYPE = np.dtype("<f4")


class ArchiveError(ValueError):
    pass


@dataclass(frozen=True)
class Layer:
    name: str
    kind: str
    data: np.ndarray

    def __post_init__(self) -> None:
        if self.kind not in LAYER_KINDS:
            raise ArchiveError(f"layer {self.name!r}: unknown kind {self.kind!r}, expected one of {LAYER_KINDS}")
        data = np.array(self.data, dtype=np.float32)
        if not np.all(np.isfinite(data)):
            raise ArchiveError(f"layer {self.name!r}: non-finite value")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def size(self) -> int:
        return int(self.data.size)

    def as_matrix(self) -> np.ndarray:
        """float64 matrix view: (out, in * kh * kw) for conv kernels, row vector for 1-D layers."""
        w = self.data.astype(np.float64)
        if w.ndim == 0:
            return w.reshape(1, 1)
        if w.ndim == 1:
            return w.reshape(1, -1)
        return w.reshape(w.shape[0], -1)


@dataclass(frozen=True)
class TensorArchive:
    layers: tuple[Layer, ...]

    def weight_layers(self) -> tuple[Layer, ...]:
        return tuple(l for l in self.layers if l.kind != "bias")

    def scaled(self, c: float) -> "TensorArchive":
        return TensorArchive(tuple(Layer(l.name, l.kind, l.data * np.float32(c)) for l in self.layers))


def read_tensor_archive(path: str | Path) -> TensorArchive:
    path = Path(path)
    manifest = path / "manifest.json"
    if not manifest.is_file():
        raise ArchiveError(f"{path}: missing manifest.json")
    try:
        doc = json.loads(manifest.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ArchiveError(f"{manifest}: malformed JSON: {exc}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("layers"), list):
        raise ArchiveError(f"{manifest}: expected an object with a 'layers' list")
    layers = []
    for entry in doc["layers"]:
        name = entry.get("name")
        shape = entry.get("shape")
        if not isinstance(shape, list) or any(isinstance(d, bool) or not isinstance(d, int) or d < 0 for d in shape):
            raise ArchiveError(f"layer {name!r}: shape must be a list of non-negative integers")
        blob = path / entry["file"]
        if not blob.is_file():
            raise ArchiveError(f"layer {name!r}: missing file {blob}")
        raw = blob.read_bytes()
        expected = _DTYPE.itemsize * math.prod(shape)
        if len(raw) != expected:
            raise ArchiveError(
                f"layer {name!r}: {blob.name} holds {len(raw)} bytes, shape {shape} needs {expected}"
            )
        data = np.frombuffer(raw, dtype=_DTYPE).reshape(shape)
        layers.append(Layer(name, entry.get("kind", "other"), data))
    return TensorArchive(tuple(layers))


def write_tensor_archive(path: str | Path, layers: Sequence[Layer] | TensorArchive) -> Path:
    if isinstance(layers, TensorArchive):
        layers = layers.layers
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, layer in enumerate(layers):
        fname = f"{i:03d}_{layer.name}.bin"
        (path / fname).write_bytes(np.ascontiguousarray(layer.data, dtype=_DTYPE).tobytes())
        entries.append({"name": layer.name, "kind": layer.kind, "shape": list(layer.shape), "file": fname})
    (path / "manifest.json").write_text(json.dumps({"layers": entries}, indent=2) + "\n", encoding="utf-8")
    return path
