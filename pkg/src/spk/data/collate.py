from __future__ import annotations

import random
from collections.abc import Sequence
from numbers import Number
from typing import Any

import numpy as np
import torch

from .sampler import derive_seed


def _flatten(items: Sequence, indices: Sequence[int] | None):
    rows, idx = [], []
    for i, item in enumerate(items):
        source = indices[i] if indices is not None else i
        views = item if isinstance(item, list) else [item]
        for view in views:
            rows.append(view)
            idx.append(source)
    return rows, idx


def _stack(key: str, values: list) -> Any:
    first = values[0]
    if isinstance(first, torch.Tensor):
        try:
            return torch.stack(values)
        except RuntimeError as exc:
            shapes = sorted({tuple(v.shape) for v in values})
            raise ValueError(f"cannot stack key '{key}': shapes {shapes}") from exc
    if isinstance(first, np.ndarray):
        return torch.from_numpy(np.stack(values))
    if isinstance(first, bool):
        return torch.tensor(values, dtype=torch.bool)
    if isinstance(first, Number):
        return torch.tensor(values)
    return list(values)


def assemble_batch(items: Sequence, indices: Sequence[int] | None = None) -> dict:
    """Collate per-sample dicts into one batch dict.

    Multi-view items (lists of dicts) contribute one row per view. The
    ``sample_idx`` key is filled from ``indices`` (the dataset indices the
    items were fetched with), aligned with the rows.
    """
    if len(items) == 0:
        raise ValueError("cannot assemble an empty list of items")
    rows, idx = _flatten(items, indices)
    keys = set(rows[0])
    for row in rows[1:]:
        if set(row) != keys:
            diff = sorted(keys.symmetric_difference(row))
            raise KeyError(f"items have heterogeneous keys; symmetric difference: {diff}")
    batch = {key: _stack(key, [row[key] for row in rows]) for key in rows[0]}
    batch["sample_idx"] = torch.tensor(idx, dtype=torch.long)
    return batch


def _collate_pairs(pairs):
    return assemble_batch([item for _, item in pairs], [i for i, _ in pairs])


class IndexedDataset(torch.utils.data.Dataset):
    """Pairs each item with the index it was fetched with, for collation."""

    def __init__(self, dataset, seed: int = 0):
        self.dataset = dataset
        self.seed = seed
        self.epoch = 0

    def __len__(self) -> int:
        return len(self.dataset)

    def __getitem__(self, index):
        return index, self.dataset[index]

    def __getitems__(self, indices):
        return [(i, self.dataset[i]) for i in indices]

    def set_epoch(self, epoch: int) -> None:
        self.epoch = epoch


def seed_worker(worker_id: int) -> None:
    """Seed a loader worker from (global seed, worker id, epoch)."""
    info = torch.utils.data.get_worker_info()
    ds = info.dataset
    seed_all(derive_seed(getattr(ds, "seed", 0), worker_id + 1, getattr(ds, "epoch", 0)))


def seed_all(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed % 2**32)
    torch.manual_seed(seed)


def make_loader(
    dataset,
    batch_size: int,
    sampler=None,
    shuffle: bool = False,
    num_workers: int = 0,
    drop_last: bool = False,
    seed: int = 0,
) -> torch.utils.data.DataLoader:
    """Build a DataLoader that emits batch dicts with ``sample_idx``."""
    n_views = getattr(sampler, "n_views", 1)
    if batch_size % n_views:
        raise ValueError(
            f"batch_size {batch_size} must be a multiple of the sampler's n_views {n_views} "
            "so view groups are never split"
        )
    if shuffle and sampler is None:
        from .sampler import RepeatedRandomSampler

        sampler = RepeatedRandomSampler(dataset, n_views=1, seed=seed)
    return torch.utils.data.DataLoader(
        IndexedDataset(dataset, seed=seed),
        batch_size=batch_size,
        sampler=sampler,
        num_workers=num_workers,
        drop_last=drop_last,
        collate_fn=_collate_pairs,
        worker_init_fn=seed_worker if num_workers > 0 else None,
    )


# the appendix-style name
DataLoader = make_loader
