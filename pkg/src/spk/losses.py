from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn


def nt_xent(z1: torch.Tensor, z2: torch.Tensor, temperature: float = 0.5) -> torch.Tensor:
    """Normalized temperature-scaled cross entropy (SimCLR loss).

    Row ``i`` of ``z1`` and row ``i`` of ``z2`` are the positive pair; every
    other row of either view is a negative. Inputs are L2-normalized here,
    so callers should pass raw projections.
    """
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    if z1.shape != z2.shape or z1.dim() != 2:
        raise ValueError(f"expected two N x D tensors of equal shape, got {tuple(z1.shape)} and {tuple(z2.shape)}")
    n = z1.shape[0]
    if n == 0:
        raise ValueError("nt_xent needs at least one pair")
    if not (torch.isfinite(z1).all() and torch.isfinite(z2).all()):
        raise ValueError("nt_xent got non-finite inputs")

    u = F.normalize(torch.cat([z1, z2], dim=0), dim=1)
    logits = u @ u.T / temperature
    self_mask = torch.eye(2 * n, dtype=torch.bool, device=u.device)
    logits = logits.masked_fill(self_mask, float("-inf"))
    logits = logits - logits.max(dim=1, keepdim=True).values.detach()
    positive = torch.arange(2 * n, device=u.device).roll(n)
    pos_logit = logits[torch.arange(2 * n, device=u.device), positive]
    return (torch.logsumexp(logits, dim=1) - pos_logit).mean()


class NTXEntLoss(nn.Module):
    def __init__(self, temperature: float = 0.5):
        super().__init__()
        if temperature <= 0:
            raise ValueError(f"temperature must be positive, got {temperature}")
        self.temperature = temperature

    def forward(self, z1: torch.Tensor, z2: torch.Tensor) -> torch.Tensor:
        return nt_xent(z1, z2, self.temperature)

    def extra_repr(self) -> str:
        return f"temperature={self.temperature}"
