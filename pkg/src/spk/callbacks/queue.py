"""Keyed FIFO feature buffers shared between callbacks."""

from __future__ import annotations

import torch


class FeatureQueue:
    """Fixed-capacity ring buffer of detached feature rows with labels."""

    def __init__(self, key: str, capacity: int, dim: int, device: torch.device | str = "cpu"):
        if capacity <= 0 or dim <= 0:
            raise ValueError(f"capacity and dim must be positive, got {capacity}, {dim}")
        self.key = key
        self.dim = dim
        self.features = torch.zeros(capacity, dim, device=device)
        self.labels = torch.full((capacity,), -1, dtype=torch.long, device=device)
        self.fill = 0
        self.cursor = 0
        self.last_step: int | None = None

    @property
    def capacity(self) -> int:
        return self.features.shape[0]

    def append(self, features: torch.Tensor, labels: torch.Tensor | None = None) -> None:
        features = features.detach()
        if features.dim() != 2 or features.shape[1] != self.dim:
            raise ValueError(f"queue '{self.key}' stores width {self.dim}, got shape {tuple(features.shape)}")
        n = features.shape[0]
        if n == 0:
            return
        if labels is None:
            labels = torch.full((n,), -1, dtype=torch.long)
        labels = torch.as_tensor(labels).detach().reshape(-1).long()
        if labels.shape[0] != n:
            raise ValueError(f"got {n} feature rows but {labels.shape[0]} labels")
        cap = self.capacity
        if n > cap:
            features, labels = features[-cap:], labels[-cap:]
            n = cap
        features = features.to(self.features.device, self.features.dtype)
        labels = labels.to(self.labels.device)
        first = min(n, cap - self.cursor)
        self.features[self.cursor:self.cursor + first] = features[:first]
        self.labels[self.cursor:self.cursor + first] = labels[:first]
        if first < n:
            self.features[:n - first] = features[first:]
            self.labels[:n - first] = labels[first:]
        self.cursor = (self.cursor + n) % cap
        self.fill = min(cap, self.fill + n)

    def contents(self, last: int | None = None) -> tuple[torch.Tensor, torch.Tensor]:
        """Stored rows oldest first, optionally only the newest ``last``."""
        if self.fill < self.capacity:
            feats, labels = self.features[:self.fill], self.labels[:self.fill]
        else:
            feats = torch.cat([self.features[self.cursor:], self.features[:self.cursor]])
            labels = torch.cat([self.labels[self.cursor:], self.labels[:self.cursor]])
        if last is not None:
            feats, labels = feats[-last:], labels[-last:]
        return feats, labels

    def grow(self, capacity: int) -> None:
        if capacity <= self.capacity:
            return
        feats, labels = self.contents()
        self.features = torch.zeros(capacity, self.dim, device=self.features.device)
        self.labels = torch.full((capacity,), -1, dtype=torch.long, device=self.labels.device)
        self.features[:self.fill] = feats
        self.labels[:self.fill] = labels
        self.cursor = self.fill % capacity

    def state_dict(self) -> dict:
        feats, labels = self.contents()
        return {"key": self.key, "dim": self.dim, "capacity": self.capacity,
                "features": feats.cpu().clone(), "labels": labels.cpu().clone(),
                "last_step": self.last_step}

    @classmethod
    def from_state_dict(cls, state: dict) -> "FeatureQueue":
        q = cls(state["key"], state["capacity"], state["dim"])
        q.append(state["features"], state["labels"])
        q.last_step = state["last_step"]
        return q


class QueueRegistry:
    """One physical :class:`FeatureQueue` per feature key, shared by subscribers."""

    def __init__(self):
        self.queues: dict[str, FeatureQueue] = {}

    def __len__(self) -> int:
        return len(self.queues)

    def register(self, key: str, requested_length: int, dim: int, device="cpu") -> FeatureQueue:
        if requested_length <= 0:
            raise ValueError(f"requested_length must be positive, got {requested_length}")
        queue = self.queues.get(key)
        if queue is None:
            queue = FeatureQueue(key, requested_length, dim, device=device)
            self.queues[key] = queue
        elif queue.dim != dim:
            raise ValueError(f"queue '{key}' already registered with dim {queue.dim}, requested dim {dim}")
        else:
            queue.grow(requested_length)
        return queue

    def push(self, key: str, features: torch.Tensor, labels: torch.Tensor | None, step: int) -> None:
        """Append once per training step, however many subscribers call this."""
        queue = self.queues[key]
        if queue.last_step == step:
            return
        queue.append(features, labels)
        queue.last_step = step

    def state_dict(self) -> dict:
        return {key: q.state_dict() for key, q in self.queues.items()}

    def load_state_dict(self, state: dict) -> None:
        self.queues = {key: FeatureQueue.from_state_dict(s) for key, s in state.items()}
