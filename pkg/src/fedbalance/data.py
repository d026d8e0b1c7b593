"""Dataset sources: synthetic Gaussian blobs and IDX (MNIST-format) files."""
from __future__ import annotations

import gzip
import struct
from pathlib import Path

import numpy as np

from .models import ClientDataset

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


def make_blobs(n_samples: int = 1000, dim: int = 10, separation: float = 2.0,
               seed: int = 0, bias: bool = True) -> ClientDataset:
    """Two unit-variance Gaussian classes with labels -1/+1.

    Class means sit at ``+-separation/2`` along a random unit direction; the
    classes alternate so each holds half the samples. With ``bias`` a
    constant 1 column is appended (the last feature).
    """
    if n_samples < 2 or dim < 1:
        raise ValueError("need n_samples >= 2 and dim >= 1")
    rng = np.random.default_rng(seed)
    direction = rng.standard_normal(dim)
    direction /= np.linalg.norm(direction)
    labels = np.where(np.arange(n_samples) % 2 == 0, 1.0, -1.0)
    X = rng.standard_normal((n_samples, dim)) + np.outer(labels, direction) * (separation / 2)
    if bias:
        X = np.hstack([X, np.ones((n_samples, 1))])
    return ClientDataset(X, labels)


def train_test_split(data: ClientDataset, test_fraction: float = 0.2,
                     seed: int = 0) -> tuple[ClientDataset, ClientDataset]:
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie in (0, 1)")
    perm = np.random.default_rng(seed).permutation(data.size)
    n_test = max(1, int(round(test_fraction * data.size)))
    if n_test >= data.size:
        raise ValueError("dataset too small to split")
    return data.subset(np.sort(perm[n_test:])), data.subset(np.sort(perm[:n_test]))


def _open(path: Path):
    return gzip.open(path, "rb") if path.suffix == ".gz" else open(path, "rb")


def read_idx(path) -> np.ndarray:
    """Read an IDX ubyte file (images 0x803 or labels 0x801), optionally gzipped."""
    path = Path(path)
    with _open(path) as fh:
        raw = fh.read()
    if len(raw) < 8:
        raise ValueError(f"{path}: truncated IDX header")
    magic = struct.unpack(">I", raw[:4])[0]
    if magic == IDX_IMAGES_MAGIC:
        count, rows, cols = struct.unpack(">III", raw[4:16])
        shape, offset = (count, rows, cols), 16
    elif magic == IDX_LABELS_MAGIC:
        count = struct.unpack(">I", raw[4:8])[0]
        shape, offset = (count,), 8
    else:
        raise ValueError(f"{path}: unsupported IDX magic 0x{magic:08x}")
    body = np.frombuffer(raw, dtype=np.uint8, offset=offset)
    expected = int(np.prod(shape))
    if body.size != expected:
        raise ValueError(f"{path}: expected {expected} bytes of data, found {body.size}")
    return body.reshape(shape)


def write_idx(path, array: np.ndarray) -> None:
    """Write uint8 images (N, rows, cols) or labels (N,) in IDX format."""
    array = np.asarray(array, dtype=np.uint8)
    if array.ndim == 3:
        header = struct.pack(">IIII", IDX_IMAGES_MAGIC, *array.shape)
    elif array.ndim == 1:
        header = struct.pack(">II", IDX_LABELS_MAGIC, array.shape[0])
    else:
        raise ValueError("IDX writer handles 1-D labels or 3-D images")
    Path(path).write_bytes(header + array.tobytes())


def load_idx_parity(images_path, labels_path, subset: int | None = None,
                    seed: int = 0, bias: bool = True) -> ClientDataset:
    """Even/odd digit classification: +1 for even digits, -1 for odd.

    Pixels are scaled to [0, 1]. ``subset`` draws that many samples at random.
    """
    images = read_idx(images_path)
    digits = read_idx(labels_path)
    if images.shape[0] != digits.shape[0]:
        raise ValueError(f"{images.shape[0]} images but {digits.shape[0]} labels")
    idx = np.arange(images.shape[0])
    if subset is not None and subset < images.shape[0]:
        idx = np.sort(np.random.default_rng(seed).choice(images.shape[0], subset, replace=False))
    X = images[idx].reshape(len(idx), -1).astype(np.float64) / 255.0
    if bias:
        X = np.hstack([X, np.ones((len(idx), 1))])
    y = np.where(digits[idx] % 2 == 0, 1.0, -1.0)
    return ClientDataset(X, y)
