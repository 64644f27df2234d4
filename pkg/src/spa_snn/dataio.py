"""IDX dataset ingestion (MNIST / EMNIST-letters) and checkpoint persistence.

IDX is the big-endian binary container the datasets ship in; gzip-compressed
files are accepted transparently.  EMNIST images are stored transposed
relative to MNIST, so the loader transposes them back and remaps the 1..26
letter labels onto 0..25.

Checkpoints are a single file: a JSON header (format version, config
snapshot, array manifest, RNG state, samples seen) terminated by a marker
line, followed by the arrays as raw little-endian float64 in manifest order.
Round-trips are bit-exact.
"""

from __future__ import annotations

import gzip
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801

CHECKPOINT_VERSION = 1
_CHECKPOINT_MARKER = b"#ARRAYS\n"

MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}
EMNIST_FILES = {
    "train": ("emnist-letters-train-images-idx3-ubyte", "emnist-letters-train-labels-idx1-ubyte"),
    "test": ("emnist-letters-test-images-idx3-ubyte", "emnist-letters-test-labels-idx1-ubyte"),
}


class IdxFormatError(ValueError):
    """File is not a well-formed IDX container."""


class DatasetError(ValueError):
    """Image/label files disagree or carry out-of-domain values."""


class CheckpointError(ValueError):
    """Checkpoint is unreadable or inconsistent with the current config."""


def _read_bytes(path) -> bytes:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def load_idx_images(path) -> np.ndarray:
    """Parse an IDX image file into a uint8 array of shape (n, rows, cols)."""
    raw = _read_bytes(path)
    if len(raw) < 16:
        raise IdxFormatError("truncated file")
    magic, n, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != IDX_IMAGE_MAGIC:
        raise IdxFormatError("not an IDX image file")
    expected = 16 + n * rows * cols
    if len(raw) < expected:
        raise IdxFormatError("truncated file")
    if len(raw) > expected:
        raise IdxFormatError("trailing data after image payload")
    return np.frombuffer(raw, dtype=np.uint8, offset=16).reshape(n, rows, cols)


def load_idx_labels(path) -> np.ndarray:
    """Parse an IDX label file into a uint8 vector."""
    raw = _read_bytes(path)
    if len(raw) < 8:
        raise IdxFormatError("truncated file")
    magic, n = struct.unpack(">II", raw[:8])
    if magic != IDX_LABEL_MAGIC:
        raise IdxFormatError("not an IDX label file")
    if len(raw) < 8 + n:
        raise IdxFormatError("truncated file")
    if len(raw) > 8 + n:
        raise IdxFormatError("trailing data after label payload")
    return np.frombuffer(raw, dtype=np.uint8, offset=8)


@dataclass
class Dataset:
    """Images, labels and split metadata; immutable once loaded."""

    images: np.ndarray  # (n, 28, 28) uint8
    labels: np.ndarray  # (n,) int64 in [0, n_classes)
    name: str
    split: str
    n_classes: int

    def __len__(self) -> int:
        return len(self.images)


def _find_file(dataset_dir: Path, stem: str) -> Path:
    for candidate in (dataset_dir / stem, dataset_dir / (stem + ".gz")):
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"{stem}[.gz] not found under {dataset_dir}")


def load_dataset(name: str, split: str, dataset_dir) -> Dataset:
    """Load one split of ``mnist`` or ``emnist-letters`` from ``dataset_dir``.

    Plain and .gz files are both accepted.  Counts, pixel geometry and label
    domains are validated; EMNIST images are transposed to MNIST orientation
    and letter labels shifted to 0..25.
    """
    dataset_dir = Path(dataset_dir)
    if name == "mnist":
        img_stem, lbl_stem = MNIST_FILES[split]
        n_classes = 10
    elif name == "emnist-letters":
        img_stem, lbl_stem = EMNIST_FILES[split]
        n_classes = 26
    else:
        raise DatasetError(f"unknown dataset {name!r}")

    images = load_idx_images(_find_file(dataset_dir, img_stem))
    labels = load_idx_labels(_find_file(dataset_dir, lbl_stem)).astype(np.int64)
    if len(images) != len(labels):
        raise DatasetError(
            f"image/label count mismatch: {len(images)} images vs {len(labels)} labels"
        )
    if images.shape[1:] != (28, 28):
        raise DatasetError(f"expected 28x28 images, got {images.shape[1:]}")

    if name == "emnist-letters":
        if labels.min() < 1 or labels.max() > 26:
            raise DatasetError("letter labels must lie in 1..26")
        labels = labels - 1
        images = np.ascontiguousarray(images.transpose(0, 2, 1))
    else:
        if labels.max() > 9:
            raise DatasetError("digit labels must lie in 0..9")
    return Dataset(images=images, labels=labels, name=name, split=split, n_classes=n_classes)


@dataclass
class Checkpoint:
    """Portable snapshot of a trained network."""

    config: dict
    weights: np.ndarray       # (n_inputs, n_exc) float64
    theta: np.ndarray         # (n_exc,) float64
    assignments: np.ndarray   # (n_exc,) int64, -1 = unassigned
    rng_state: dict
    samples_seen: int
    version: int = CHECKPOINT_VERSION


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    arrays = [
        ("weights", ckpt.weights),
        ("theta", ckpt.theta),
        ("assignments", ckpt.assignments.astype(np.float64)),
    ]
    header = {
        "format_version": ckpt.version,
        "config": ckpt.config,
        "samples_seen": ckpt.samples_seen,
        "rng_state": ckpt.rng_state,
        "arrays": [{"name": name, "shape": list(a.shape)} for name, a in arrays],
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        f.write(b"\n")
        f.write(_CHECKPOINT_MARKER)
        for _, a in arrays:
            f.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def load_checkpoint(path, expected_config: dict | None = None) -> Checkpoint:
    """Read a checkpoint; optionally verify dimensions against a config."""
    raw = Path(path).read_bytes()
    marker_at = raw.find(_CHECKPOINT_MARKER)
    if marker_at < 0:
        raise CheckpointError("corrupt header: array marker missing")
    try:
        header = json.loads(raw[:marker_at].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"corrupt header: {exc}") from exc
    if header.get("format_version") != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint version {header.get('format_version')!r}"
        )
    offset = marker_at + len(_CHECKPOINT_MARKER)
    arrays = {}
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        end = offset + 8 * count
        if end > len(raw):
            raise CheckpointError("truncated array payload")
        arrays[entry["name"]] = np.frombuffer(raw, dtype="<f8", count=count, offset=offset).reshape(shape).copy()
        offset = end
    if offset != len(raw):
        raise CheckpointError("trailing bytes after array payload")

    config = header["config"]
    if expected_config is not None:
        for key in ("neurons", "dataset"):
            if key in expected_config and expected_config[key] != config.get(key):
                raise CheckpointError(
                    f"checkpoint/config mismatch on {key!r}: "
                    f"{config.get(key)!r} vs {expected_config[key]!r}"
                )
    weights = arrays["weights"]
    n_exc = int(config["neurons"])
    if weights.shape[1] != n_exc:
        raise CheckpointError(
            f"dimension mismatch: weights for {weights.shape[1]} neurons, config says {n_exc}"
        )
    return Checkpoint(
        config=config,
        weights=weights,
        theta=arrays["theta"],
        assignments=arrays["assignments"].astype(np.int64),
        rng_state=header["rng_state"],
        samples_seen=int(header["samples_seen"]),
    )
