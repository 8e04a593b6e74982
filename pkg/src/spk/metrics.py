"""Metric kernels: top-k accuracy and the RankMe / LiDAR collapse scores."""

from __future__ import annotations

import torch


def topk_accuracy(logits: torch.Tensor, targets: torch.Tensor, k: int = 1) -> float:
    """Fraction of rows whose target is among the ``k`` largest logits.

    Ties at the k-th value go to the lower class index.
    """
    correct, total = topk_correct(logits, targets, k)
    return correct / total if total else 0.0


def topk_correct(logits: torch.Tensor, targets: torch.Tensor, k: int = 1) -> tuple[int, int]:
    logits = logits.detach()
    targets = torch.as_tensor(targets, device=logits.device).reshape(-1).long()
    n_classes = logits.shape[1]
    if not 1 <= k <= n_classes:
        raise ValueError(f"k must be in [1, {n_classes}], got {k}")
    if targets.numel() and (targets.min() < 0 or targets.max() >= n_classes):
        raise ValueError(f"targets must be in [0, {n_classes}), got range "
                         f"[{int(targets.min())}, {int(targets.max())}]")
    order = torch.argsort(-logits, dim=1, stable=True)[:, :k]
    hits = (order == targets[:, None]).any(dim=1)
    return int(hits.sum()), targets.numel()


class TopKAccuracy:
    """Streaming top-k accuracy accumulator."""

    def __init__(self, k: int = 1):
        self.k = k
        self.reset()

    def reset(self) -> None:
        self.correct = 0
        self.total = 0

    def update(self, logits: torch.Tensor, targets: torch.Tensor) -> None:
        c, t = topk_correct(logits, targets, self.k)
        self.correct += c
        self.total += t

    def compute(self) -> float | None:
        return self.correct / self.total if self.total else None

    def state_dict(self) -> dict:
        return {"correct": self.correct, "total": self.total}

    def load_state_dict(self, state: dict) -> None:
        self.correct, self.total = state["correct"], state["total"]


def _spectral_entropy_rank(values: torch.Tensor, eps: float) -> float:
    values = values.clamp_min(0)
    total = values.sum()
    if total <= 0:
        return 1.0
    p = values / (total + eps)
    nz = p[p > 0]
    return float(torch.exp(-(nz * nz.log()).sum()))


def rankme(z: torch.Tensor, eps: float = 1e-7) -> float:
    """Exponential of the entropy of the normalized singular value spectrum."""
    z = torch.as_tensor(z).detach()
    if z.dim() != 2 or z.shape[0] < 1 or z.shape[1] < 1:
        raise ValueError(f"rankme expects an N x D matrix, got shape {tuple(z.shape)}")
    if not torch.isfinite(z).all():
        raise ValueError("rankme got non-finite embeddings")
    s = torch.linalg.svdvals(z.to(torch.float64))
    return _spectral_entropy_rank(s, eps)


def lidar(view_embeddings: torch.Tensor, delta: float = 1e-4, eps: float = 1e-7) -> float:
    """LiDAR score of ``n`` surrogate classes with ``q`` views each (n x q x D).

    Spectral entropy rank of the LDA matrix between-class scatter whitened
    by the (delta-regularized) within-class scatter.
    """
    e = torch.as_tensor(view_embeddings).detach()
    if e.dim() != 3:
        raise ValueError(f"lidar expects n x q x D embeddings, got shape {tuple(e.shape)}")
    n, q, d = e.shape
    if n < 2 or q < 1:
        raise ValueError(f"lidar needs n >= 2 classes and q >= 1 views, got n={n}, q={q}")
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if not torch.isfinite(e).all():
        raise ValueError("lidar got non-finite embeddings")
    e = e.to(torch.float64)

    class_means = e.mean(dim=1)
    grand_mean = class_means.mean(dim=0)
    cb = class_means - grand_mean
    sigma_b = cb.T @ cb / (n - 1)
    cw = (e - class_means[:, None, :]).reshape(n * q, d)
    sigma_w = cw.T @ cw / (n * q) + delta * torch.eye(d, dtype=e.dtype)

    w_vals, w_vecs = torch.linalg.eigh(sigma_w)
    if not torch.isfinite(w_vals).all() or w_vals.min() < -1e-12:
        raise ValueError("within-class scatter is not positive semi-definite")
    inv_sqrt = w_vecs @ torch.diag(w_vals.clamp_min(delta).rsqrt()) @ w_vecs.T
    lda = inv_sqrt @ sigma_b @ inv_sqrt
    lda = (lda + lda.T) / 2
    return _spectral_entropy_rank(torch.linalg.eigvalsh(lda), eps)
