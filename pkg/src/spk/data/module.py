from __future__ import annotations

from dataclasses import dataclass

import torch

from .collate import IndexedDataset, derive_seed, seed_all


@dataclass
class DataModule:
    """Container for the train/val/test loaders of a run."""

    train: torch.utils.data.DataLoader | None = None
    val: torch.utils.data.DataLoader | None = None
    test: torch.utils.data.DataLoader | None = None

    def set_epoch(self, loader, seed: int, epoch: int, reseed: bool = True) -> None:
        """Advance sampler and transform RNG for ``epoch``.

        In-process loading shares the global RNG, which is reseeded here;
        worker processes reseed themselves on startup.
        """
        sampler = getattr(loader, "sampler", None)
        if hasattr(sampler, "set_epoch"):
            sampler.set_epoch(epoch)
        ds = getattr(loader, "dataset", None)
        if isinstance(ds, IndexedDataset):
            ds.seed = seed
            ds.set_epoch(epoch)
        if reseed and getattr(loader, "num_workers", 0) == 0:
            seed_all(derive_seed(seed, 0, epoch))
