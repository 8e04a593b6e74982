from __future__ import annotations

import torch

from .base import Callback, lookup


def knn_predict(queries: torch.Tensor, features: torch.Tensor, labels: torch.Tensor, k: int,
                distance: str = "euclidean") -> torch.Tensor:
    """Majority vote over the ``k`` nearest stored features.

    Ties between equally frequent labels go to the label of the nearest
    neighbour among the tied ones.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if features.shape[0] < k:
        raise ValueError(f"need at least k={k} stored features, have {features.shape[0]}")
    queries = queries.detach().float()
    features = features.detach().float().to(queries.device)
    labels = labels.to(queries.device).long()
    if distance == "euclidean":
        dist = torch.cdist(queries, features)
    elif distance == "cosine":
        q = torch.nn.functional.normalize(queries, dim=1)
        f = torch.nn.functional.normalize(features, dim=1)
        dist = 1 - q @ f.T
    else:
        raise ValueError(f"unknown distance {distance!r}; use 'euclidean' or 'cosine'")

    order = torch.argsort(dist, dim=1, stable=True)[:, :k]
    nn_labels = labels[order]  # M x k, nearest first
    n_classes = int(labels.max()) + 1 if labels.numel() else 1
    counts = torch.zeros(queries.shape[0], n_classes, dtype=torch.long, device=queries.device)
    counts.scatter_add_(1, nn_labels, torch.ones_like(nn_labels))
    best = counts.max(dim=1, keepdim=True).values
    is_candidate = counts.gather(1, nn_labels) == best
    first = is_candidate.long().argmax(dim=1)
    return nn_labels.gather(1, first[:, None]).squeeze(1)


class OnlineKNN(Callback):
    """k-NN accuracy of validation features against a queue of train features."""

    def __init__(self, name: str, input: str, target: str = "label", queue_length: int = 20000,
                 k: int = 10, distance: str = "euclidean", metrics=("accuracy",), input_dim: int | None = None):
        self.name = name
        self.input = input
        self.target = target
        self.queue_length = queue_length
        self.k = k
        self.distance = distance
        self.metric_names = list(metrics) if not isinstance(metrics, dict) else list(metrics)
        self.input_dim = input_dim
        self.queue = None
        self.correct = 0
        self.total = 0
        self.skipped = False

    def setup(self, trainer, module) -> None:
        self.queue = None
        if self.input_dim is not None:
            self.queue = trainer.queues.register(self.input, self.queue_length, self.input_dim, trainer.device)

    def _features(self, outputs, batch):
        x = lookup(self.input, outputs, batch, f"knn '{self.name}'").detach()
        return x.flatten(1) if x.dim() > 2 else x

    def on_train_batch_end(self, trainer, module, outputs, batch) -> None:
        x = self._features(outputs, batch)
        y = lookup(self.target, outputs, batch, f"knn '{self.name}'")
        if self.queue is None:
            self.queue = trainer.queues.register(self.input, self.queue_length, x.shape[1], trainer.device)
        trainer.queues.push(self.input, x, y, trainer.global_step)

    def on_validation_epoch_start(self, trainer, module) -> None:
        self.correct = self.total = 0
        self.skipped = False

    def on_validation_batch_end(self, trainer, module, outputs, batch) -> None:
        if self.queue is None or self.queue.fill < self.k:
            self.skipped = True
            return
        x = self._features(outputs, batch)
        y = torch.as_tensor(lookup(self.target, outputs, batch, f"knn '{self.name}'")).to(x.device)
        feats, labels = self.queue.contents(last=self.queue_length)
        keep = labels >= 0
        feats, labels = feats[keep], labels[keep]
        if labels.numel() < self.k:
            self.skipped = True
            return
        pred = knn_predict(x, feats, labels, self.k, self.distance)
        self.correct += int((pred == y).sum())
        self.total += y.numel()

    def on_validation_epoch_end(self, trainer, module) -> None:
        if self.skipped:
            trainer.log(f"val/{self.name}/insufficient_queue", 1.0)
        elif self.total:
            for metric in self.metric_names:
                trainer.log(f"val/{self.name}/{metric}", self.correct / self.total)
