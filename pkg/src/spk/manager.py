"""Run orchestration: seeding, resume policy, checkpoints and metric sinks."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import random
from pathlib import Path

import numpy as np
import torch

from .checkpoint import CheckpointState, load_checkpoint, save_checkpoint
from .engine import Trainer
from .loggers import CSVSink, MetricLogger
from .module import NonFiniteLossError
from .optim import build_optimizer

logger = logging.getLogger(__name__)

RESUME_MODES = ("auto", "never", "must")
# keys that may change between a run and its resumption
_VOLATILE = {("trainer", "max_epochs"), ("run_dir",), ("resume",)}


class ResumeError(RuntimeError):
    pass


class TrainingAborted(RuntimeError):
    def __init__(self, message: str, checkpoint: Path | None):
        self.checkpoint = checkpoint
        super().__init__(f"{message}; last good checkpoint: {checkpoint}")


def seed_everything(seed: int) -> int:
    """Seed python, numpy and torch (data order and augmentations derive from it too)."""
    seed = int(seed)
    random.seed(seed)
    np.random.seed(seed % 2**32)
    torch.manual_seed(seed)
    return seed


def get_rng_state() -> dict:
    state = {"python": random.getstate(), "numpy": np.random.get_state(), "torch": torch.get_rng_state()}
    if torch.cuda.is_available():
        state["cuda"] = torch.cuda.get_rng_state_all()
    return state


def set_rng_state(state: dict) -> None:
    random.setstate(state["python"])
    np.random.set_state(state["numpy"])
    torch.set_rng_state(state["torch"])
    if "cuda" in state and torch.cuda.is_available():
        torch.cuda.set_rng_state_all(state["cuda"])


def _strip_volatile(cfg, path=()):
    if isinstance(cfg, dict):
        return {k: _strip_volatile(v, path + (k,)) for k, v in cfg.items() if path + (k,) not in _VOLATILE}
    return cfg


def config_hash(config: dict, module: torch.nn.Module) -> str:
    payload = {
        "config": _strip_volatile(config),
        "params": [(n, list(p.shape)) for n, p in module.state_dict().items()],
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True, default=str).encode()).hexdigest()[:16]


class Manager:
    """Drive ``trainer`` over ``module`` and ``data`` with checkpoint/resume.

    On start the run directory is scanned for ``last.ckpt``; with
    ``resume="auto"`` a checkpoint whose config hash matches is resumed,
    a mismatching one is refused. ``SPK_RUN_DIR`` overrides ``run_dir``;
    ``SPK_RESUME`` applies when ``resume`` is not given.
    """

    def __init__(self, trainer: Trainer, module, data, seed: int = 0, run_dir: str | Path | None = None,
                 config: dict | None = None, resume: str | None = None, save_every_n_epochs: int = 1):
        self.trainer = trainer
        self.module = module
        self.data = data
        self.seed = seed
        self.run_dir = Path(os.environ.get("SPK_RUN_DIR") or run_dir or "runs/default")
        self.resume = resume or os.environ.get("SPK_RESUME") or "auto"
        if self.resume not in RESUME_MODES:
            raise ValueError(f"resume must be one of {RESUME_MODES}, got {self.resume!r}")
        self.config = config or {"optim": module.optim.to_dict(), "seed": seed}
        self.save_every_n_epochs = save_every_n_epochs
        self.handle = None
        self.last_good: Path | None = None
        self.checkpoints: list[Path] = []

    def __call__(self) -> CheckpointState:
        return self.run()

    def log(self, name: str, value: float, step: int) -> None:
        self.trainer.log(name, value, step)

    # -- checkpoints ---------------------------------------------------------
    @property
    def last_path(self) -> Path:
        return self.run_dir / "last.ckpt"

    def state(self) -> CheckpointState:
        return CheckpointState(
            weights={k: v.detach().cpu().clone() for k, v in self.module.state_dict().items()},
            optimizer=self.handle.optimizer.state_dict(),
            scheduler=self.handle.scheduler.state_dict() if self.handle.scheduler is not None else None,
            global_step=self.trainer.global_step,
            epoch=self.completed_epochs,
            rng=get_rng_state(),
            queues=self.trainer.queues.state_dict(),
            callbacks={cb.name: cb.state_dict() for cb in self.trainer.callbacks},
            config=self.config,
            config_hash=self._hash,
        )

    def _restore(self, state: CheckpointState) -> None:
        self.module.load_state_dict(state.weights)
        self.handle.optimizer.load_state_dict(state.optimizer)
        if self.handle.scheduler is not None and state.scheduler is not None:
            self.handle.scheduler.load_state_dict(state.scheduler)
        self.trainer.global_step = state.global_step
        self.completed_epochs = state.epoch
        self.trainer.queues.load_state_dict(state.queues)
        for cb in self.trainer.callbacks:
            if cb.name in state.callbacks:
                cb.load_state_dict(state.callbacks[cb.name])
        set_rng_state(state.rng)

    def _save(self, epoch: int) -> None:
        self.completed_epochs = epoch + 1
        state = self.state()
        if self.save_every_n_epochs and (epoch + 1) % self.save_every_n_epochs == 0:
            path = save_checkpoint(state, self.run_dir / f"epoch={epoch}.ckpt")
            self.checkpoints.append(path)
        save_checkpoint(state, self.last_path)
        self.last_good = self.last_path

    # -- main ----------------------------------------------------------------
    def _check_run_dir(self) -> None:
        try:
            self.run_dir.mkdir(parents=True, exist_ok=True)
            probe = self.run_dir / ".write_test"
            probe.write_text("ok")
            probe.unlink()
        except OSError as exc:
            raise PermissionError(f"run directory {self.run_dir} is not writable: {exc}") from exc

    def run(self) -> CheckpointState:
        self._check_run_dir()
        trainer = self.trainer
        seed_everything(self.seed)
        trainer.seed = self.seed
        trainer.global_step = 0
        self.completed_epochs = 0
        self._hash = config_hash(self.config, self.module)

        trainer.setup(self.module)
        self.handle = build_optimizer(self.module, self.module.optim, trainer.steps_per_epoch(self.data),
                                      max(trainer.max_epochs, 1))

        if self.resume != "never" and self.last_path.exists():
            state = load_checkpoint(self.last_path)
            if state.config_hash != self._hash:
                raise ResumeError(
                    f"{self.last_path} was written by a different configuration "
                    f"(hash {state.config_hash} != {self._hash}); use a fresh run directory "
                    "or SPK_RESUME=never to start over"
                )
            self._restore(state)
            self.last_good = self.last_path
            logger.info("resumed from %s at epoch %d, step %d", self.last_path, state.epoch, state.global_step)
        elif self.resume == "must":
            raise ResumeError(f"resume=must but no checkpoint at {self.last_path}")

        trainer.metrics = MetricLogger([CSVSink(self.run_dir / "metrics.csv"), *trainer.sinks])
        try:
            trainer.fit(self.module, self.data, self.handle, start_epoch=self.completed_epochs,
                        on_epoch_end=self._save)
        except NonFiniteLossError as exc:
            raise TrainingAborted(str(exc), self.last_good) from exc
        finally:
            trainer.metrics.close()
        return self.state()
