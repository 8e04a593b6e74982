from __future__ import annotations

import math
from collections.abc import Mapping
from typing import Any, Callable

import torch
from torch import nn

from .batch import Stage
from .optim import OptimConfig


class NonFiniteLossError(RuntimeError):
    def __init__(self, value: float, step: int | None):
        self.value = value
        self.step = step
        super().__init__(f"non-finite loss {value} at step {step}")


class Module(nn.Module):
    """Named components plus one stage-aware ``forward(self, batch, stage)``.

    Components are attached as attributes, so ``self.backbone`` works inside
    the user forward. A ``"loss"`` key in the train-stage output is what the
    trainer optimizes.
    """

    def __init__(self, forward: Callable[..., Mapping] | None = None, optim: dict | OptimConfig | None = None,
                 **components: Any):
        super().__init__()
        if forward is None:
            raise ValueError("Module needs a forward(self, batch, stage) function")
        for name, component in components.items():
            setattr(self, name, component)
        self.component_names = list(components)
        self.user_forward = forward
        self.optim = OptimConfig.from_dict(optim)
        self.captures: dict[str, torch.Tensor] = {}
        self.global_step = 0

    def forward(self, batch: dict, stage: Stage | str = Stage.TRAIN) -> dict:
        return run_forward(self, batch, stage)


def run_forward(module: Module, batch: dict, stage: Stage | str) -> dict:
    """Invoke the user forward and check its output contract."""
    stage = Stage(stage)
    module.captures.clear()
    out = module.user_forward(module, batch, stage)
    if not isinstance(out, Mapping):
        raise TypeError(f"forward must return a mapping, got {type(out).__name__}")
    if module.captures:
        out = dict(out)
        for key, value in module.captures.items():
            out.setdefault(key, value)
        module.captures.clear()
    if "loss" in out:
        loss = out["loss"]
        value = float(loss.detach()) if isinstance(loss, torch.Tensor) else float(loss)
        if not math.isfinite(value):
            raise NonFiniteLossError(value, module.global_step)
    return out
