from __future__ import annotations

from collections.abc import Mapping, Sequence
from typing import Any, Callable

import torch

from .transforms import MultiViewTransform


def adapt_item(
    source_item: Any,
    names: Sequence[str] | None,
    transform: Callable[[dict], Any] | None = None,
) -> dict | list[dict]:
    """Turn a raw record into a batch-shaped dict and apply ``transform``.

    Tuples are mapped positionally onto ``names``; mappings are copied. A
    :class:`MultiViewTransform` yields a list of dicts, one per view.
    """
    if isinstance(source_item, Mapping):
        item = dict(source_item)
        if names is not None:
            missing = [n for n in names if n not in item]
            if missing:
                raise KeyError(f"record is missing keys {missing}; has {sorted(item)}")
    else:
        if not isinstance(source_item, (tuple, list)):
            source_item = (source_item,)
        if names is None:
            raise ValueError("names are required to adapt tuple records")
        if len(names) != len(source_item):
            raise ValueError(
                f"record arity mismatch: expected {len(names)} fields {list(names)}, "
                f"got {len(source_item)}"
            )
        item = dict(zip(names, source_item))
    if transform is None:
        return item
    return transform(item)


class FromDataset(torch.utils.data.Dataset):
    """Wrap any indexable dataset so items come out as dicts.

    Works with torchvision datasets, Hugging Face datasets (which already
    yield mappings) or plain lists of tuples.
    """

    def __init__(self, source, names: Sequence[str] | None = None, transform=None):
        self.source = source
        self.names = list(names) if names is not None else None
        self.transform = transform

    def __len__(self) -> int:
        return len(self.source)

    def __getitem__(self, index: int):
        return adapt_item(self.source[index], self.names, self.transform)

    @property
    def n_views(self) -> int:
        return self.transform.n_views if isinstance(self.transform, MultiViewTransform) else 1


# torchvision naming
FromTorchDataset = FromDataset
