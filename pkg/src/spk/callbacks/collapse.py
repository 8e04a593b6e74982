from __future__ import annotations

import torch

from ..batch import fold_views
from ..metrics import lidar, rankme
from .base import Callback, lookup


class RankMe(Callback):
    """Log the RankMe score of the newest queued train features each epoch."""

    def __init__(self, name: str = "rankme", input: str = "embedding", queue_length: int = 2048,
                 eps: float = 1e-7):
        self.name = name
        self.input = input
        self.queue_length = queue_length
        self.eps = eps
        self.queue = None

    def setup(self, trainer, module) -> None:
        self.queue = None

    def on_train_batch_end(self, trainer, module, outputs, batch) -> None:
        x = lookup(self.input, outputs, batch, f"rankme '{self.name}'").detach().flatten(1)
        if self.queue is None:
            self.queue = trainer.queues.register(self.input, self.queue_length, x.shape[1], trainer.device)
        labels = batch.get("label")
        trainer.queues.push(self.input, x, labels, trainer.global_step)

    def on_train_epoch_end(self, trainer, module) -> None:
        if self.queue is None or self.queue.fill == 0:
            return
        feats, _ = self.queue.contents(last=self.queue_length)
        trainer.log(f"train/{self.name}/rankme", rankme(feats, self.eps))


class LiDAR(Callback):
    """Log the LiDAR score using the views of each sample as surrogate classes.

    Needs multi-view train batches carrying ``sample_idx``.
    """

    def __init__(self, name: str = "lidar", input: str = "embedding", n_classes: int = 256,
                 delta: float = 1e-4, eps: float = 1e-7):
        self.name = name
        self.input = input
        self.n_classes = n_classes
        self.delta = delta
        self.eps = eps
        self.n_views = None
        self.queue = None

    @property
    def key(self) -> str:
        return f"{self.input}::views"

    def setup(self, trainer, module) -> None:
        self.queue = None

    def on_train_batch_end(self, trainer, module, outputs, batch) -> None:
        x = lookup(self.input, outputs, batch, f"lidar '{self.name}'").detach().flatten(1)
        views = fold_views(x, batch["sample_idx"])
        if len(views) < 2:
            return
        grouped = torch.stack(views, dim=1)  # n x V x D
        if self.queue is None:
            self.n_views = grouped.shape[1]
            width = grouped.shape[1] * grouped.shape[2]
            self.queue = trainer.queues.register(self.key, self.n_classes, width, trainer.device)
        trainer.queues.push(self.key, grouped.flatten(1), None, trainer.global_step)

    def on_train_epoch_end(self, trainer, module) -> None:
        if self.queue is None or self.queue.fill < 2:
            return
        feats, _ = self.queue.contents(last=self.n_classes)
        e = feats.reshape(feats.shape[0], self.n_views, -1)
        trainer.log(f"train/{self.name}/lidar", lidar(e, self.delta, self.eps))
