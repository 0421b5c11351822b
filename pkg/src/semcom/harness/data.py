"""Dataset ingestion: CIFAR-10 batch files or a deterministic synthetic set.

The synthetic generator produces smooth seeded color textures (low-frequency
random fields plus sinusoidal shading) so metrics like SSIM see structured
content; it keeps the harness and tests runnable without dataset downloads.
"""

from __future__ import annotations

import pickle
from pathlib import Path

import numpy as np
import torch

CIFAR_TRAIN_FILES = [f"data_batch_{i}" for i in range(1, 6)]
CIFAR_TEST_FILES = ["test_batch"]


def synthetic_images(count: int, size: int = 32, seed: int = 0) -> np.ndarray:
    """Deterministic batch of smooth textures, shape (count, size, size, 3) in [0, 1]."""
    rng = np.random.default_rng(seed)
    coarse = rng.random((count, 4, 4, 3))
    imgs = np.empty((count, size, size, 3))
    # Bilinear upsampling of the coarse field.
    src = np.linspace(0, 3, size)
    i0 = np.clip(np.floor(src).astype(int), 0, 2)
    frac = src - i0
    for n in range(count):
        rows = (coarse[n, i0] * (1 - frac)[:, None, None]
                + coarse[n, np.minimum(i0 + 1, 3)] * frac[:, None, None])
        imgs[n] = (rows[:, i0] * (1 - frac)[None, :, None]
                   + rows[:, np.minimum(i0 + 1, 3)] * frac[None, :, None])
    yy, xx = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    freq = rng.uniform(0.1, 0.6, size=(count, 2))
    phase = rng.uniform(0, 2 * np.pi, size=(count, 1, 1))
    wave = 0.5 + 0.5 * np.sin(freq[:, 0, None, None] * yy + freq[:, 1, None, None] * xx + phase)
    imgs = 0.7 * imgs + 0.3 * wave[..., None]
    # Contrast stretch keeps strong structure for codecs and metrics to latch onto.
    imgs = 0.5 + (imgs - 0.5) * 1.8
    return np.clip(imgs, 0.0, 1.0)


def _load_cifar_files(root: Path, files: list[str]) -> np.ndarray:
    arrays = []
    for name in files:
        path = root / name
        if not path.exists():
            raise FileNotFoundError(f"dataset file missing: {path}")
        try:
            with open(path, "rb") as fh:
                batch = pickle.load(fh, encoding="bytes")
            data = batch[b"data"]
        except (pickle.UnpicklingError, KeyError, EOFError) as exc:
            raise ValueError(f"corrupt dataset file {path}: {exc}") from exc
        arrays.append(np.asarray(data, dtype=np.uint8))
    raw = np.concatenate(arrays)
    images = raw.reshape(-1, 3, 32, 32).transpose(0, 2, 3, 1)
    return images.astype(np.float64) / 255.0


def _resolve_cifar_root(path: Path) -> Path:
    if (path / "cifar-10-batches-py").is_dir():
        return path / "cifar-10-batches-py"
    return path


def load_dataset(path: str, split: str = "train", limit: int | None = None,
                 seed: int = 0) -> torch.Tensor:
    """Load a normalized image set as a float32 tensor (N, H, W, 3).

    path "synthetic" (optionally "synthetic:<count>") generates the procedural
    set sized by limit; any other path must hold CIFAR-10 python batch files.
    Order is a seeded shuffle, so a fixed seed reproduces the same batches.
    """
    if split not in ("train", "test"):
        raise ValueError(f"split must be 'train' or 'test', got {split!r}")
    if path.startswith("synthetic"):
        count = 512
        if ":" in path:
            count = int(path.split(":", 1)[1])
        if limit is not None:
            count = max(count, limit)
        # Disjoint seed streams keep train and test splits independent.
        split_seed = seed * 2 + (0 if split == "train" else 1)
        images = synthetic_images(count, seed=split_seed)
    else:
        root = _resolve_cifar_root(Path(path))
        files = CIFAR_TRAIN_FILES if split == "train" else CIFAR_TEST_FILES
        images = _load_cifar_files(root, files)
    order = np.random.default_rng(seed).permutation(images.shape[0])
    images = images[order]
    if limit is not None:
        images = images[:limit]
    return torch.from_numpy(np.ascontiguousarray(images).astype(np.float32))


def batch_iterator(images: torch.Tensor, batch_size: int, generator: torch.Generator,
                   shuffle: bool = True):
    """Yield batches in a generator-driven order (deterministic given its state)."""
    n = images.shape[0]
    order = torch.randperm(n, generator=generator) if shuffle else torch.arange(n)
    for start in range(0, n, batch_size):
        idx = order[start:start + batch_size]
        yield images[idx]
