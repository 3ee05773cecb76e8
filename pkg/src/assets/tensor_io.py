"""
TriMorph v2026 - NTC1 Tensor Container
Layout: b"NTC1" | uint32 LE header length | JSON header | raw LE float32 payload.
"""

import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Union

import numpy as np

from ..errors import TensorCorruptionError, TensorFormatError

logger = logging.getLogger(__name__)

MAGIC = b"NTC1"
SUPPORTED_DTYPES = ("f32",)
MANIFEST_NAME = "manifest.json"

PathLike = Union[str, Path]


@dataclass(frozen=True)
class TensorBlob:
    """Flat row-major float32 data with its shape."""
    shape: tuple[int, ...]
    data: np.ndarray
    dtype: str = "f32"

    def __post_init__(self):
        shape = tuple(int(s) for s in self.shape)
        if not shape or any(s <= 0 for s in shape):
            raise TensorFormatError(f"Invalid tensor shape: {list(shape)}")
        if self.dtype not in SUPPORTED_DTYPES:
            raise TensorFormatError(f"Unsupported dtype: {self.dtype}")
        data = np.ascontiguousarray(self.data, dtype="<f4").reshape(-1)
        if data.size != int(np.prod(shape)):
            raise TensorCorruptionError(
                f"Shape {list(shape)} needs {int(np.prod(shape))} elements, got {data.size}"
            )
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_array(cls, array: np.ndarray) -> "TensorBlob":
        array = np.asarray(array)
        return cls(shape=array.shape, data=array.reshape(-1))

    def to_array(self) -> np.ndarray:
        return self.data.astype(np.float32).reshape(self.shape)


def write_tensor(path: PathLike, blob: TensorBlob):
    """Write a blob to disk; round trip is bit-exact."""
    header = json.dumps({"dtype": blob.dtype, "shape": list(blob.shape)}).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(header)))
        f.write(header)
        f.write(blob.data.astype("<f4").tobytes())


def read_tensor(path: PathLike) -> TensorBlob:
    """Read and validate an NTC1 file."""
    raw = Path(path).read_bytes()
    if len(raw) < 8 or raw[:4] != MAGIC:
        raise TensorFormatError(f"Bad magic in {path}")
    (header_len,) = struct.unpack("<I", raw[4:8])
    if 8 + header_len > len(raw):
        raise TensorFormatError(f"Truncated header in {path}")
    try:
        header = json.loads(raw[8:8 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise TensorFormatError(f"Unreadable header in {path}: {e}") from e
    if not isinstance(header, dict) or set(header) != {"dtype", "shape"}:
        raise TensorFormatError(f"Header must carry exactly dtype and shape: {header}")
    shape = header["shape"]
    if not isinstance(shape, list) or not shape or not all(
        isinstance(s, int) and s > 0 for s in shape
    ):
        raise TensorFormatError(f"Invalid shape in header: {shape}")
    if header["dtype"] not in SUPPORTED_DTYPES:
        raise TensorFormatError(f"Unsupported dtype: {header['dtype']}")

    payload = raw[8 + header_len:]
    expected = int(np.prod(shape)) * 4
    if len(payload) != expected:
        raise TensorCorruptionError(
            f"Header declares {shape} ({expected} bytes) but payload has {len(payload)} bytes"
        )
    data = np.frombuffer(payload, dtype="<f4").copy()
    return TensorBlob(shape=tuple(shape), data=data, dtype=header["dtype"])


def save_array(path: PathLike, array: np.ndarray):
    write_tensor(path, TensorBlob.from_array(array))


def load_array(path: PathLike) -> np.ndarray:
    return read_tensor(path).to_array()


def write_tensor_dir(directory: PathLike, tensors: dict[str, np.ndarray], manifest: dict[str, Any]):
    """Checkpoint layout: one NTC1 file per tensor plus manifest.json."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, array in tensors.items():
        save_array(directory / f"{name}.ntc", array)
    body = dict(manifest)
    body["tensors"] = sorted(tensors)
    (directory / MANIFEST_NAME).write_text(json.dumps(body, indent=2, sort_keys=True))
    logger.debug(f"Wrote {len(tensors)} tensors to {directory}")


def read_tensor_dir(directory: PathLike) -> tuple[dict[str, np.ndarray], dict[str, Any]]:
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.exists():
        raise FileNotFoundError(f"No manifest in {directory}")
    manifest = json.loads(manifest_path.read_text())
    tensors = {name: load_array(directory / f"{name}.ntc") for name in manifest.get("tensors", [])}
    return tensors, manifest
