"""Per-sample transform pipelines operating on batch dicts.

Image math is delegated to ``torchvision.transforms.v2``; this module only
provides the dict-aware composition layer.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
import torch
from torchvision.transforms import v2

CIFAR10 = {"mean": (0.4914, 0.4822, 0.4465), "std": (0.2470, 0.2435, 0.2616)}


class _KeyTransform:
    """Apply a torchvision transform to one key of the dict."""

    def __init__(self, fn, key: str = "image"):
        self.fn = fn
        self.key = key

    def __call__(self, item: dict) -> dict:
        out = dict(item)
        out[self.key] = self.fn(item[self.key])
        return out

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.fn!r}, key={self.key!r})"


class ToImage(_KeyTransform):
    """Convert PIL / ndarray / uint8 tensors to normalized float CHW tensors."""

    def __init__(self, mean=None, std=None, key: str = "image"):
        steps = [v2.ToImage(), v2.ToDtype(torch.float32, scale=True)]
        if mean is not None and std is not None:
            steps.append(v2.Normalize(mean=list(mean), std=list(std)))
        super().__init__(v2.Compose(steps), key)

    def __call__(self, item: dict) -> dict:
        value = item[self.key]
        if isinstance(value, np.ndarray) and value.ndim == 3 and value.shape[0] in (1, 3):
            value = torch.from_numpy(value)
        return super().__call__({**item, self.key: value})


class RGB(_KeyTransform):
    def __init__(self, key: str = "image"):
        super().__init__(_to_rgb, key)


def _to_rgb(img):
    if hasattr(img, "convert"):
        return img.convert("RGB")
    if isinstance(img, torch.Tensor) and img.dim() == 3 and img.shape[0] == 1:
        return img.expand(3, -1, -1)
    return img


class RandomResizedCrop(_KeyTransform):
    def __init__(self, size, scale=(0.08, 1.0), key: str = "image"):
        super().__init__(v2.RandomResizedCrop(size, scale=tuple(scale), antialias=True), key)


class Resize(_KeyTransform):
    def __init__(self, size, key: str = "image"):
        super().__init__(v2.Resize(size, antialias=True), key)


class RandomHorizontalFlip(_KeyTransform):
    def __init__(self, p: float = 0.5, key: str = "image"):
        super().__init__(v2.RandomHorizontalFlip(p), key)


class ColorJitter(_KeyTransform):
    def __init__(self, brightness=0.0, contrast=0.0, saturation=0.0, hue=0.0, p=1.0, key="image"):
        jitter = v2.ColorJitter(brightness, contrast, saturation, hue)
        super().__init__(v2.RandomApply([jitter], p=p), key)


class RandomGrayscale(_KeyTransform):
    def __init__(self, p: float = 0.1, key: str = "image"):
        super().__init__(v2.RandomGrayscale(p), key)


class RandomSolarize(_KeyTransform):
    def __init__(self, threshold: float = 0.5, p: float = 0.5, key: str = "image"):
        super().__init__(v2.RandomSolarize(threshold, p), key)


class Normalize(_KeyTransform):
    def __init__(self, mean, std, key: str = "image"):
        super().__init__(v2.Normalize(mean=list(mean), std=list(std)), key)


class Compose:
    def __init__(self, *transforms):
        if len(transforms) == 1 and isinstance(transforms[0], (list, tuple)):
            transforms = tuple(transforms[0])
        self.transforms = list(transforms)

    def __call__(self, item: dict) -> dict:
        for t in self.transforms:
            item = t(item)
        return item

    def __repr__(self) -> str:
        inner = ", ".join(repr(t) for t in self.transforms)
        return f"Compose({inner})"


class MultiViewTransform:
    """Apply each sub-pipeline to the same sample, yielding one dict per view.

    Views are ordered by sub-pipeline index.
    """

    def __init__(self, pipelines: Sequence):
        if len(pipelines) < 1:
            raise ValueError("MultiViewTransform needs at least one pipeline")
        self.pipelines = list(pipelines)

    @property
    def n_views(self) -> int:
        return len(self.pipelines)

    def __call__(self, item: dict) -> list[dict]:
        return [p(dict(item)) for p in self.pipelines]
