from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any

import torch

logger = logging.getLogger(__name__)

OPTIMIZERS = ("LARS", "SGD", "AdamW")
SCHEDULERS = ("LinearWarmupCosineAnnealing", "none")


def trust_ratio(w_norm: float, g_norm: float, weight_decay: float, eps: float = 0.0) -> float:
    if w_norm <= 0 or g_norm <= 0:
        return 1.0
    return w_norm / (g_norm + weight_decay * w_norm + eps)


def lars_update(
    w: torch.Tensor,
    g: torch.Tensor,
    lr: float,
    weight_decay: float = 0.0,
    eps: float = 0.0,
    trust_coefficient: float = 1.0,
) -> torch.Tensor:
    """One momentum-free LARS step; returns the new weight tensor."""
    if w.shape != g.shape:
        raise ValueError(f"weight shape {tuple(w.shape)} != gradient shape {tuple(g.shape)}")
    r = trust_ratio(float(w.norm()), float(g.norm()), weight_decay, eps)
    return w - lr * trust_coefficient * r * (g + weight_decay * w)


class LARS(torch.optim.Optimizer):
    """Layer-wise adaptive rate scaling on top of heavy-ball momentum.

    Each parameter tensor gets its own trust ratio
    ``||w|| / (||g|| + wd * ||w|| + eps)``. Tensors with ``ndim <= 1``
    (biases, norm scales) skip both the adaptation and weight decay.
    """

    def __init__(self, params, lr: float, weight_decay: float = 0.0, momentum: float = 0.9,
                 trust_coefficient: float = 0.001, eps: float = 1e-8):
        if lr <= 0:
            raise ValueError(f"lr must be positive, got {lr}")
        defaults = dict(lr=lr, weight_decay=weight_decay, momentum=momentum,
                        trust_coefficient=trust_coefficient, eps=eps)
        super().__init__(params, defaults)

    @torch.no_grad()
    def step(self, closure=None):
        loss = None
        if closure is not None:
            with torch.enable_grad():
                loss = closure()
        for group in self.param_groups:
            for p in group["params"]:
                if p.grad is None:
                    continue
                g = p.grad
                if p.ndim > 1:
                    wd = group["weight_decay"]
                    r = trust_ratio(float(p.norm()), float(g.norm()), wd, group["eps"])
                    update = (g + wd * p) * (group["trust_coefficient"] * r)
                else:
                    update = g
                update = update * group["lr"]
                state = self.state[p]
                if "momentum_buffer" not in state:
                    state["momentum_buffer"] = update.clone()
                else:
                    state["momentum_buffer"].mul_(group["momentum"]).add_(update)
                p.sub_(state["momentum_buffer"])
        return loss


def warmup_cosine_lr(step: int, warmup: int, total: int, base_lr: float, eta_min: float = 0.0) -> float:
    """Linear warmup from 0 to ``base_lr`` then cosine decay to ``eta_min``."""
    if warmup >= total:
        raise ValueError(f"warmup ({warmup}) must be smaller than total ({total})")
    if step > total:
        logger.warning("step %d past the schedule end %d; clamping to eta_min", step, total)
        return eta_min
    if step < warmup:
        return base_lr * step / warmup
    progress = (step - warmup) / (total - warmup)
    return eta_min + 0.5 * (base_lr - eta_min) * (1 + math.cos(math.pi * progress))


class LinearWarmupCosineAnnealing(torch.optim.lr_scheduler.LRScheduler):
    def __init__(self, optimizer, warmup_steps: int, total_steps: int, eta_min: float = 0.0,
                 last_epoch: int = -1):
        if total_steps <= warmup_steps or warmup_steps < 0:
            raise ValueError(f"need 0 <= warmup_steps < total_steps, got {warmup_steps}, {total_steps}")
        self.warmup_steps = warmup_steps
        self.total_steps = total_steps
        self.eta_min = eta_min
        super().__init__(optimizer, last_epoch)

    def get_lr(self):
        t = min(self.last_epoch, self.total_steps)
        return [warmup_cosine_lr(t, self.warmup_steps, self.total_steps, base, self.eta_min)
                for base in self.base_lrs]


@dataclass
class OptimConfig:
    optimizer: str = "LARS"
    lr: float = 5.0
    weight_decay: float = 1e-6
    momentum: float = 0.9
    scheduler: str = "LinearWarmupCosineAnnealing"
    warmup_steps: int | None = None
    total_steps: int | None = None
    eta_min: float = 0.0
    interval: str = "epoch"
    extra: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer type {self.optimizer!r}; supported: {list(OPTIMIZERS)}")
        if self.scheduler not in SCHEDULERS:
            raise ValueError(f"unknown scheduler type {self.scheduler!r}; supported: {list(SCHEDULERS)}")
        if self.interval not in ("step", "epoch"):
            raise ValueError(f"interval must be 'step' or 'epoch', got {self.interval!r}")
        if self.lr <= 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if self.weight_decay < 0:
            raise ValueError(f"weight_decay must be >= 0, got {self.weight_decay}")

    @classmethod
    def from_dict(cls, cfg: dict | None) -> "OptimConfig":
        """Accept either the flat form or the nested ``{"optimizer": {...},
        "scheduler": {...}, "interval": ...}`` form."""
        if cfg is None:
            return cls()
        if isinstance(cfg, OptimConfig):
            return cfg
        cfg = dict(cfg)
        if isinstance(cfg.get("optimizer"), dict) or isinstance(cfg.get("scheduler"), dict):
            opt = dict(cfg.get("optimizer") or {})
            sched = dict(cfg.get("scheduler") or {"type": "none"})
            flat = {"optimizer": opt.pop("type", "LARS"), "scheduler": sched.pop("type", "none")}
            for key in ("lr", "weight_decay", "momentum"):
                if key in opt:
                    flat[key] = opt.pop(key)
            for key in ("warmup_steps", "total_steps", "eta_min"):
                if key in sched:
                    flat[key] = sched.pop(key)
            if "interval" in cfg:
                flat["interval"] = cfg["interval"]
            if sched:
                raise KeyError(f"unknown scheduler keys {sorted(sched)}")
            flat["extra"] = opt
            cfg = flat
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(cfg) - known
        if unknown:
            raise KeyError(f"unknown optim keys {sorted(unknown)}; known: {sorted(known)}")
        out = cls(**cfg)
        out.lr = float(out.lr)
        out.weight_decay = float(out.weight_decay)
        return out

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class OptimHandle:
    optimizer: torch.optim.Optimizer
    scheduler: torch.optim.lr_scheduler.LRScheduler | None
    interval: str

    def lr(self) -> float:
        return self.optimizer.param_groups[0]["lr"]

    def state_dict(self) -> dict:
        return {
            "optimizer": self.optimizer.state_dict(),
            "scheduler": self.scheduler.state_dict() if self.scheduler is not None else None,
        }


def build_optimizer(module: torch.nn.Module, cfg: OptimConfig | dict, steps_per_epoch: int = 1,
                    max_epochs: int = 1) -> OptimHandle:
    """Create optimizer and scheduler over the trainable parameters of ``module``.

    Schedule lengths default to the run length in ``cfg.interval`` units,
    with 10% warmup.
    """
    cfg = OptimConfig.from_dict(cfg)
    params = [p for p in module.parameters() if p.requires_grad]
    if not params:
        raise ValueError("module has no trainable parameters")

    extra = dict(cfg.extra)
    if cfg.optimizer == "LARS":
        opt = LARS(params, lr=cfg.lr, weight_decay=cfg.weight_decay, momentum=cfg.momentum, **extra)
    elif cfg.optimizer == "SGD":
        opt = torch.optim.SGD(params, lr=cfg.lr, weight_decay=cfg.weight_decay, momentum=cfg.momentum, **extra)
    else:
        opt = torch.optim.AdamW(params, lr=cfg.lr, weight_decay=cfg.weight_decay, **extra)

    sched = None
    if cfg.scheduler == "LinearWarmupCosineAnnealing":
        total = cfg.total_steps
        if total is None:
            total = max_epochs * (steps_per_epoch if cfg.interval == "step" else 1)
        total = max(int(total), 1)
        warmup = cfg.warmup_steps if cfg.warmup_steps is not None else total // 10
        if warmup >= total:
            warmup = total - 1
        sched = LinearWarmupCosineAnnealing(opt, warmup_steps=warmup, total_steps=total, eta_min=cfg.eta_min)
    return OptimHandle(opt, sched, cfg.interval)
