from __future__ import annotations

import zlib

import torch
from torch import nn

from ..metrics import TopKAccuracy
from .base import Callback, lookup


def build_metrics(metrics) -> dict:
    """Normalize a metric spec into ``{name: accumulator}``.

    Accepts accumulators, integers (top-k) or names such as ``"top5"``.
    """
    if metrics is None:
        metrics = {"top1": 1}
    if isinstance(metrics, (list, tuple)):
        metrics = {m: m for m in metrics}
    out = {}
    for name, spec in metrics.items():
        if isinstance(spec, int):
            out[name] = TopKAccuracy(spec)
        elif isinstance(spec, str):
            if spec in ("accuracy", "acc"):
                out[name] = TopKAccuracy(1)
            elif spec.startswith("top") and spec[3:].isdigit():
                out[name] = TopKAccuracy(int(spec[3:]))
            else:
                raise ValueError(f"unknown metric {spec!r}")
        else:
            out[name] = spec
    return out


class OnlineProbe(Callback):
    """Train a predictor on detached features alongside the main model.

    The probe has its own optimizer, so its loss never reaches the backbone.
    With ``probe=None`` a linear head is created on first use, sized from
    the incoming features.
    """

    def __init__(self, name: str, input: str, target: str = "label", probe: nn.Module | None = None,
                 loss_fn=None, metrics=None, num_classes: int | None = None, optimizer: dict | None = None):
        if probe is None and num_classes is None:
            raise ValueError("OnlineProbe needs either a probe module or num_classes")
        self.name = name
        self.input = input
        self.target = target
        self.probe = probe
        self.num_classes = num_classes
        self.loss_fn = loss_fn if loss_fn is not None else nn.CrossEntropyLoss()
        self.optimizer_cfg = {"lr": 1e-3, "weight_decay": 0.0, **(optimizer or {})}
        self.optimizer: torch.optim.Optimizer | None = None
        self.train_metrics = build_metrics(metrics)
        self.val_metrics = build_metrics(metrics)
        self._pending: dict | None = None
        self._device = "cpu"

    def setup(self, trainer, module) -> None:
        self._device = trainer.device
        if self.probe is not None:
            self.probe.to(self._device)

    def _ensure(self, x: torch.Tensor) -> None:
        if self.probe is None:
            # own RNG stream: lazy creation must not shift the global one
            with torch.random.fork_rng(devices=[]):
                torch.manual_seed(zlib.crc32(self.name.encode()))
                self.probe = nn.Linear(x.shape[1], self.num_classes).to(self._device)
        if self.optimizer is None:
            self.optimizer = torch.optim.AdamW(self.probe.parameters(), **self.optimizer_cfg)
            if self._pending is not None:
                self._load(self._pending)
                self._pending = None

    def _inputs(self, outputs, batch):
        x = lookup(self.input, outputs, batch, f"probe '{self.name}'")
        y = lookup(self.target, outputs, batch, f"probe '{self.name}'")
        x = x.detach().float()
        if x.dim() > 2:
            x = x.flatten(1)
        return x, torch.as_tensor(y, device=x.device).long()

    def on_train_batch_end(self, trainer, module, outputs, batch) -> None:
        x, y = self._inputs(outputs, batch)
        self._ensure(x)
        self.probe.train()
        with torch.enable_grad():
            logits = self.probe(x)
            loss = self.loss_fn(logits, y)
        self.optimizer.zero_grad(set_to_none=True)
        loss.backward()
        self.optimizer.step()
        for metric in self.train_metrics.values():
            metric.update(logits.detach(), y)
        trainer.log(f"train/{self.name}/loss", float(loss.detach()))

    def on_validation_batch_end(self, trainer, module, outputs, batch) -> None:
        x, y = self._inputs(outputs, batch)
        self._ensure(x)
        self.probe.eval()
        with torch.no_grad():
            logits = self.probe(x)
        for metric in self.val_metrics.values():
            metric.update(logits, y)

    def _flush(self, trainer, stage: str, metrics: dict) -> None:
        for name, metric in metrics.items():
            value = metric.compute()
            if value is not None:
                trainer.log(f"{stage}/{self.name}/{name}", float(value))
            metric.reset()

    def on_train_epoch_end(self, trainer, module) -> None:
        self._flush(trainer, "train", self.train_metrics)

    def on_validation_epoch_end(self, trainer, module) -> None:
        self._flush(trainer, "val", self.val_metrics)

    def state_dict(self) -> dict:
        if self.probe is None:
            return {}
        return {
            "in_features": getattr(self.probe, "in_features", None),
            "probe": self.probe.state_dict(),
            "optimizer": self.optimizer.state_dict() if self.optimizer is not None else None,
        }

    def _load(self, state: dict) -> None:
        self.probe.load_state_dict(state["probe"])
        if state.get("optimizer") is not None and self.optimizer is not None:
            self.optimizer.load_state_dict(state["optimizer"])

    def load_state_dict(self, state: dict) -> None:
        if not state:
            return
        if self.probe is None:
            x = torch.zeros(1, state["in_features"])
            self._ensure(x)
        elif self.optimizer is None:
            self.optimizer = torch.optim.AdamW(self.probe.parameters(), **self.optimizer_cfg)
        self._load(state)
