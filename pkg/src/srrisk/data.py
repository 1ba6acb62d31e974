"""MNIST in raw IDX format, plus small synthetic fixtures."""

import gzip
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DomainError, FormatError, LengthError, ShapeError
from .rng import Purpose, branch

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


@dataclass(frozen=True, eq=False)
class Dataset:
    inputs: np.ndarray
    labels: np.ndarray
    class_count: int

    def __post_init__(self):
        x = np.asarray(self.inputs)
        y = np.asarray(self.labels)
        if x.ndim != 2:
            raise ShapeError(f"inputs must be N x d, got shape {x.shape}")
        if y.ndim != 1 or y.shape[0] != x.shape[0]:
            raise ShapeError(f"{x.shape[0]} inputs but labels of shape {y.shape}")
        if int(self.class_count) < 1:
            raise DomainError(f"class_count must be positive, got {self.class_count}")
        if y.size:
            if not np.issubdtype(y.dtype, np.integer):
                if not np.all(y == np.round(y)):
                    raise DomainError("labels must be integers")
            if y.min() < 0 or y.max() >= self.class_count:
                raise DomainError(f"labels must lie in [0, {self.class_count})")
        if not np.issubdtype(x.dtype, np.floating) or not np.isfinite(x).all():
            raise DomainError("inputs must be finite reals")
        # read-only views; full MNIST is too large to copy defensively
        x = x.view()
        y = y.astype(np.int64)
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "class_count", int(self.class_count))

    def __len__(self):
        return self.labels.shape[0]

    @property
    def dim(self):
        return self.inputs.shape[1]

    def take(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.inputs[idx], self.labels[idx], self.class_count)


def _read_bytes(path) -> bytes:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def _parse_idx(raw: bytes, magic: int, ndim: int):
    header = 4 + 4 * ndim
    if len(raw) < 4:
        raise LengthError("file too short for an IDX header")
    (got,) = struct.unpack(">I", raw[:4])
    if got != magic:
        raise FormatError(f"bad IDX magic 0x{got:08x}, expected 0x{magic:08x}")
    if len(raw) < header:
        raise LengthError("truncated IDX header")
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    count = int(np.prod(dims))
    if len(raw) - header < count:
        raise LengthError(f"IDX body has {len(raw) - header} bytes, header promises {count}")
    return np.frombuffer(raw, dtype=np.uint8, count=count, offset=header).reshape(dims)


def load_idx_images(path) -> np.ndarray:
    """Unsigned-byte images flattened to ``(N, rows * cols)``; gzip is detected."""
    arr = _parse_idx(_read_bytes(path), IMAGES_MAGIC, 3)
    return arr.reshape(arr.shape[0], -1).copy()


def load_idx_labels(path, class_count: int = None) -> np.ndarray:
    labels = _parse_idx(_read_bytes(path), LABELS_MAGIC, 1).copy()
    if class_count is not None and labels.size and labels.max() >= class_count:
        raise DomainError(f"label {labels.max()} outside declared {class_count} classes")
    return labels


def normalize_and_pack(images, labels, class_count: int = 10) -> Dataset:
    images = np.asarray(images)
    if images.dtype != np.uint8:
        raise FormatError(f"expected uint8 pixels, got {images.dtype}")
    return Dataset(images.astype(np.float64) / 255.0, np.asarray(labels), class_count)


def load_mnist(images_path, labels_path, class_count: int = 10) -> Dataset:
    images = load_idx_images(images_path)
    labels = load_idx_labels(labels_path, class_count)
    if images.shape[0] != labels.shape[0]:
        raise ShapeError(f"{images.shape[0]} images but {labels.shape[0]} labels")
    return normalize_and_pack(images, labels, class_count)


def default_mnist_dir() -> Path:
    """``$SRRISK_MNIST_DIR`` if set, else ``data/mnist`` next to the source tree."""
    env = os.environ.get("SRRISK_MNIST_DIR")
    if env:
        return Path(env)
    return Path(__file__).resolve().parents[2] / "data" / "mnist"


def mnist_paths(directory=None) -> dict:
    d = Path(directory) if directory else default_mnist_dir()

    def pick(stem):
        for name in (stem, stem + ".gz"):
            if (d / name).exists():
                return d / name
        return d / (stem + ".gz")

    return {
        "train_images": pick("train-images-idx3-ubyte"),
        "train_labels": pick("train-labels-idx1-ubyte"),
        "test_images": pick("t10k-images-idx3-ubyte"),
        "test_labels": pick("t10k-labels-idx1-ubyte"),
    }


def synth_blobs(n_per_class: int, dim: int, class_count: int, separation: float, seed: int,
                spread: float = 1.0) -> Dataset:
    """Isotropic Gaussian blobs with centres ``separation`` apart along distinct axes.

    Class ``c`` is centred at ``separation / sqrt(2) * e_(c mod dim)``, offset
    along the next axis for classes beyond ``dim``.
    """
    if n_per_class < 1:
        raise DomainError("synth_blobs needs at least one point per class")
    if dim < 1 or class_count < 2:
        raise ConfigurationError("need dim >= 1 and at least two classes")
    rng = branch(seed, Purpose.DATA)
    centres = np.zeros((class_count, dim))
    scale = separation / np.sqrt(2.0)
    for c in range(class_count):
        if dim == 1:
            centres[c, 0] = c * separation
        else:
            centres[c, c % dim] = scale * (1 + c // dim)
    x = np.repeat(centres, n_per_class, axis=0) + spread * rng.standard_normal((class_count * n_per_class, dim))
    y = np.repeat(np.arange(class_count), n_per_class)
    order = rng.permutation(len(y))
    return Dataset(x[order], y[order], class_count)


def subset(dataset: Dataset, n: int, seed: int) -> Dataset:
    """Class-stratified random subset of size ``n`` (largest-remainder allocation)."""
    total = len(dataset)
    if not 0 < n <= total:
        raise DomainError(f"subset size {n} outside (0, {total}]")
    rng = branch(seed, Purpose.DATA, 1)
    counts = np.bincount(dataset.labels, minlength=dataset.class_count)
    exact = counts * n / total
    alloc = np.floor(exact).astype(int)
    short = n - alloc.sum()
    if short:
        remainder = exact - alloc
        # ties go to the lower class index
        order = np.lexsort((np.arange(len(remainder)), -remainder))
        alloc[order[:short]] += 1
    picked = []
    for c in range(dataset.class_count):
        members = np.flatnonzero(dataset.labels == c)
        if alloc[c]:
            picked.append(rng.choice(members, size=alloc[c], replace=False))
    idx = np.concatenate(picked)
    return dataset.take(rng.permutation(idx))
