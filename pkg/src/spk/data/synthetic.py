"""Procedural 10-class shape images, a stand-in for CIFAR-10 at desk scale."""

from __future__ import annotations

import numpy as np
import torch

CLASSES = (
    "disk", "ring", "square", "frame", "triangle",
    "plus", "hbars", "vbars", "checker", "dots",
)


def _mask(cls: int, size: int, rng: np.random.Generator) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float32)
    r = rng.uniform(0.22, 0.38) * size
    cy, cx = rng.uniform(0.35, 0.65, size=2) * size
    dy, dx = yy - cy, xx - cx
    dist = np.sqrt(dy**2 + dx**2)
    cheb = np.maximum(np.abs(dy), np.abs(dx))
    name = CLASSES[cls]
    if name == "disk":
        m = dist < r
    elif name == "ring":
        m = (dist < r) & (dist > 0.6 * r)
    elif name == "square":
        m = cheb < 0.85 * r
    elif name == "frame":
        m = (cheb < 0.9 * r) & (cheb > 0.55 * r)
    elif name == "triangle":
        m = (dy < 0.8 * r) & (dy > -r + 2 * np.abs(dx)) & (np.abs(dx) < r)
    elif name == "plus":
        w = 0.3 * r
        m = ((np.abs(dx) < w) | (np.abs(dy) < w)) & (cheb < r)
    elif name == "hbars":
        period = rng.uniform(4.0, 7.0)
        m = (np.mod(yy, period) < period / 2) & (cheb < 1.2 * r)
    elif name == "vbars":
        period = rng.uniform(4.0, 7.0)
        m = (np.mod(xx, period) < period / 2) & (cheb < 1.2 * r)
    elif name == "checker":
        period = rng.uniform(6.0, 9.0)
        m = ((np.floor(yy / (period / 2)) + np.floor(xx / (period / 2))) % 2 == 0) & (cheb < 1.2 * r)
    else:  # dots
        period = rng.uniform(6.0, 9.0)
        py, px = np.mod(yy, period) - period / 2, np.mod(xx, period) - period / 2
        m = (py**2 + px**2 < (period / 4) ** 2) & (cheb < 1.2 * r)
    return m.astype(np.float32)


def make_shapes(n: int, size: int = 32, seed: int = 0, noise: float = 0.08):
    """Return ``(images uint8 [n,3,size,size], labels int64 [n])``.

    Foreground and background colors are drawn independently of the class,
    so only spatial structure identifies it.
    """
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, len(CLASSES), size=n)
    images = np.empty((n, 3, size, size), dtype=np.uint8)
    for i, cls in enumerate(labels):
        m = _mask(int(cls), size, rng)
        fg = rng.uniform(0, 1, size=3).astype(np.float32)
        bg = rng.uniform(0, 1, size=3).astype(np.float32)
        while np.abs(fg - bg).sum() < 0.6:
            bg = rng.uniform(0, 1, size=3).astype(np.float32)
        img = m[None] * fg[:, None, None] + (1 - m[None]) * bg[:, None, None]
        img += rng.normal(0, noise, size=img.shape).astype(np.float32)
        images[i] = np.clip(img * 255, 0, 255).astype(np.uint8)
    return images, labels.astype(np.int64)


class SyntheticShapes(torch.utils.data.Dataset):
    """Tuple dataset ``(image, label)`` with uint8 CHW image tensors."""

    num_classes = len(CLASSES)

    def __init__(self, n: int = 10000, size: int = 32, seed: int = 0, noise: float = 0.08):
        images, labels = make_shapes(n, size=size, seed=seed, noise=noise)
        self.images = torch.from_numpy(images)
        self.labels = labels.tolist()

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, index: int):
        return self.images[index], self.labels[index]
