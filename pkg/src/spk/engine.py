"""Minimal single-process training engine driven by the Manager."""

from __future__ import annotations

import contextlib
import logging
import time

import torch

from .batch import Stage
from .callbacks.queue import QueueRegistry
from .loggers import MetricLogger
from .module import run_forward

logger = logging.getLogger(__name__)


def to_device(batch: dict, device) -> dict:
    return {k: v.to(device, non_blocking=True) if isinstance(v, torch.Tensor) else v
            for k, v in batch.items()}


class Trainer:
    """Epoch loop, validation scheduling and callback dispatch.

    ``precision`` is passed to autocast: ``"bf16-mixed"`` anywhere,
    ``"16-mixed"`` on CUDA only (CPU falls back to fp32 with a warning).
    """

    def __init__(self, max_epochs: int = 1, callbacks=(), sinks=(), precision: str = "32",
                 deterministic: bool = False, device: str | None = None,
                 limit_train_batches: int | None = None, limit_val_batches: int | None = None,
                 check_val_every_n_epoch: int = 1):
        self.max_epochs = max_epochs
        self.callbacks = list(callbacks)
        self.sinks = list(sinks)
        self.precision = str(precision)
        self.deterministic = deterministic
        self.device = torch.device(device or ("cuda" if torch.cuda.is_available() else "cpu"))
        self.limit_train_batches = limit_train_batches
        self.limit_val_batches = limit_val_batches
        self.check_val_every_n_epoch = check_val_every_n_epoch

        self.global_step = 0
        self.current_epoch = 0
        self.queues = QueueRegistry()
        self.metrics = MetricLogger()
        self.seed = 0
        self.scaler = None

    # -- logging -----------------------------------------------------------
    def log(self, name: str, value: float, step: int | None = None) -> None:
        self.metrics.log(name, value, self.global_step if step is None else step, self.current_epoch)

    # -- helpers -----------------------------------------------------------
    def _autocast(self):
        if self.precision.startswith("bf16"):
            return torch.autocast(self.device.type, dtype=torch.bfloat16)
        if self.precision.startswith("16") and self.device.type == "cuda":
            return torch.autocast("cuda", dtype=torch.float16)
        return contextlib.nullcontext()

    def steps_per_epoch(self, data) -> int:
        n = len(data.train) if data.train is not None else 0
        return min(n, self.limit_train_batches) if self.limit_train_batches else n

    def _call(self, hook: str, *args) -> None:
        for cb in self.callbacks:
            getattr(cb, hook)(self, *args)

    def setup(self, module) -> None:
        if self.precision.startswith("16") and self.device.type != "cuda":
            logger.warning("precision %s needs CUDA; running in fp32", self.precision)
        if self.precision.startswith("16") and self.device.type == "cuda":
            self.scaler = torch.amp.GradScaler("cuda")
        if self.deterministic:
            torch.use_deterministic_algorithms(True, warn_only=True)
        module.to(self.device)
        for cb in self.callbacks:
            cb.setup(self, module)

    # -- loops -------------------------------------------------------------
    def train_epoch(self, module, data, handle) -> float | None:
        module.train()
        data.set_epoch(data.train, self.seed, self.current_epoch)
        self._call("on_train_epoch_start", module)
        start = time.perf_counter()
        losses = []
        for i, batch in enumerate(data.train):
            if self.limit_train_batches is not None and i >= self.limit_train_batches:
                break
            batch = to_device(batch, self.device)
            module.global_step = self.global_step
            with self._autocast():
                out = run_forward(module, batch, Stage.TRAIN)
            loss = out.get("loss")
            if loss is not None and isinstance(loss, torch.Tensor) and loss.requires_grad:
                handle.optimizer.zero_grad(set_to_none=True)
                if self.scaler is not None:
                    self.scaler.scale(loss).backward()
                    self.scaler.step(handle.optimizer)
                    self.scaler.update()
                else:
                    loss.backward()
                    handle.optimizer.step()
            if loss is not None:
                losses.append(float(loss.detach()))
                self.log("train/loss", losses[-1])
            self.log("train/lr", handle.lr())
            if handle.scheduler is not None and handle.interval == "step":
                handle.scheduler.step()
            self._call("on_train_batch_end", module, out, batch)
            self.global_step += 1
        self._call("on_train_epoch_end", module)
        if handle.scheduler is not None and handle.interval == "epoch":
            handle.scheduler.step()
        self.log("train/time/epoch_seconds", time.perf_counter() - start)
        if losses:
            mean = sum(losses) / len(losses)
            self.log("train/loss/epoch_mean", mean)
            return mean
        return None

    @torch.no_grad()
    def validate(self, module, data) -> None:
        if data.val is None:
            return
        module.eval()
        data.set_epoch(data.val, self.seed, self.current_epoch, reseed=False)
        self._call("on_validation_epoch_start", module)
        start = time.perf_counter()
        losses = []
        for i, batch in enumerate(data.val):
            if self.limit_val_batches is not None and i >= self.limit_val_batches:
                break
            batch = to_device(batch, self.device)
            with self._autocast():
                out = run_forward(module, batch, Stage.VALIDATE)
            if "loss" in out:
                losses.append(float(out["loss"]))
            self._call("on_validation_batch_end", module, out, batch)
        self._call("on_validation_epoch_end", module)
        if losses:
            self.log("val/loss/epoch_mean", sum(losses) / len(losses))
        self.log("val/time/epoch_seconds", time.perf_counter() - start)
        module.train()

    def fit(self, module, data, handle, start_epoch: int = 0, on_epoch_end=None) -> None:
        if self.max_epochs == 0:
            self.current_epoch = 0
            self.validate(module, data)
            return
        for epoch in range(start_epoch, self.max_epochs):
            self.current_epoch = epoch
            self.train_epoch(module, data, handle)
            if (epoch + 1) % self.check_val_every_n_epoch == 0 or epoch + 1 == self.max_epochs:
                self.validate(module, data)
            self.metrics.flush()
            if on_epoch_end is not None:
                on_epoch_end(epoch)
