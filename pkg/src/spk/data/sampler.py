from __future__ import annotations

from collections.abc import Iterator

import numpy as np
import torch


def derive_seed(*parts: int) -> int:
    """Mix integers into a 63-bit seed (stable across processes and runs)."""
    seq = np.random.SeedSequence([int(p) & 0xFFFFFFFFFFFFFFFF for p in parts])
    return int(seq.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def sampler_indices(n_samples: int, n_views: int, seed: int, epoch: int) -> list[int]:
    """Shuffled dataset indices, each repeated ``n_views`` times back to back."""
    if n_samples <= 0:
        raise ValueError(f"n_samples must be positive, got {n_samples}")
    if n_views < 1:
        raise ValueError(f"n_views must be >= 1, got {n_views}")
    gen = torch.Generator().manual_seed(derive_seed(seed, epoch))
    perm = torch.randperm(n_samples, generator=gen)
    return perm.repeat_interleave(n_views).tolist()


class RepeatedRandomSampler(torch.utils.data.Sampler):
    """Random permutation with every index repeated ``n_views`` consecutive times.

    Call :meth:`set_epoch` before each epoch to get a fresh permutation.
    """

    def __init__(self, data_source, n_views: int = 1, seed: int = 0):
        self.n_samples = data_source if isinstance(data_source, int) else len(data_source)
        self.n_views = n_views
        self.seed = seed
        self.epoch = 0
        sampler_indices(self.n_samples, n_views, seed, 0)  # argument validation

    def set_epoch(self, epoch: int) -> None:
        self.epoch = epoch

    def __len__(self) -> int:
        return self.n_samples * self.n_views

    def __iter__(self) -> Iterator[int]:
        return iter(sampler_indices(self.n_samples, self.n_views, self.seed, self.epoch))
