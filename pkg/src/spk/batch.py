"""Dictionary-shaped batch contract and view folding."""

from __future__ import annotations

import enum
import math
from collections.abc import Mapping, Sequence
from typing import Any

import torch

Batch = dict  # open str -> value mapping; see validate_batch for the rules


class Stage(str, enum.Enum):
    TRAIN = "train"
    VALIDATE = "validate"
    TEST = "test"
    PREDICT = "predict"

    @property
    def prefix(self) -> str:
        """Short name used as the first segment of logged metric names."""
        return {"validate": "val"}.get(self.value, self.value)


def _is_scalar(value: Any) -> bool:
    if isinstance(value, torch.Tensor):
        return value.numel() == 1 and value.dim() <= 1
    return isinstance(value, (int, float, bool))


def _leading_dim(value: Any) -> int | None:
    if isinstance(value, torch.Tensor) and value.dim() >= 1:
        return value.shape[0]
    if isinstance(value, (list, tuple)):
        return len(value)
    return None


def validate_batch(batch: Mapping[str, Any], required_keys: Sequence[str] = ()) -> list[str]:
    """Check ``batch`` against the batch invariants.

    Returns a list of human-readable diagnostics of the form
    ``"<rule> '<key>': <detail>"``. An empty list means the batch is valid.
    Never raises and never mutates ``batch``.
    """
    diagnostics: list[str] = []
    if not isinstance(batch, Mapping):
        return [f"not-a-mapping '<batch>': got {type(batch).__name__}"]

    for key in required_keys:
        if key not in batch:
            diagnostics.append(f"missing-key '{key}': required but absent")

    for key in batch:
        if not isinstance(key, str):
            diagnostics.append(f"non-string-key '{key!r}': keys must be strings")

    if "loss" in batch:
        loss = batch["loss"]
        if not _is_scalar(loss):
            shape = tuple(loss.shape) if isinstance(loss, torch.Tensor) else type(loss).__name__
            diagnostics.append(f"non-scalar 'loss': got {shape}")
        else:
            value = float(loss.detach().reshape(()) if isinstance(loss, torch.Tensor) else loss)
            if not math.isfinite(value):
                diagnostics.append(f"non-finite 'loss': got {value}")

    if "sample_idx" in batch:
        n = _leading_dim(batch["sample_idx"])
        if n is None:
            diagnostics.append("bad-sample-idx 'sample_idx': must be a vector")
        else:
            for key, value in batch.items():
                if key in ("sample_idx", "loss") or not isinstance(value, torch.Tensor):
                    continue
                if value.dim() >= 1 and value.shape[0] != n:
                    diagnostics.append(
                        f"row-mismatch '{key}': leading dim {value.shape[0]} != len(sample_idx) {n}"
                    )
    return diagnostics


def fold_views(rows: torch.Tensor, sample_idx: torch.Tensor | Sequence[int]) -> list[torch.Tensor]:
    """Split rows of a multi-view batch into one tensor per view.

    Output ``v`` holds, at position ``p``, the ``(v+1)``-th occurrence of the
    ``p``-th distinct ``sample_idx`` value, where distinct values are ordered
    by first appearance.
    """
    idx = torch.as_tensor(sample_idx).reshape(-1).tolist()
    if len(idx) == 0 or rows.shape[0] == 0:
        raise ValueError("fold_views got an empty batch")
    if len(idx) != rows.shape[0]:
        raise ValueError(f"sample_idx has {len(idx)} entries but rows has {rows.shape[0]}")

    groups: dict[int, list[int]] = {}
    for pos, value in enumerate(idx):
        groups.setdefault(value, []).append(pos)

    n_views = len(next(iter(groups.values())))
    for value, positions in groups.items():
        if len(positions) != n_views:
            raise ValueError(
                f"sample_idx value {value} occurs {len(positions)} times, expected {n_views}"
            )

    order = torch.tensor(list(groups.values()), dtype=torch.long, device=rows.device)
    return [rows.index_select(0, order[:, v]) for v in range(n_views)]
