"""Turn an :class:`ExperimentConfig` into live objects and run it."""

from __future__ import annotations

import copy
import logging
import os
from pathlib import Path

import torch

from . import registry
from .batch import Stage
from .callbacks import depth_probes
from .config import ConfigError, ExperimentConfig
from .data import DataModule, FromDataset, RepeatedRandomSampler, make_loader
from .data import transforms as T
from .engine import Trainer, to_device
from .loggers import ConsoleSink
from .manager import Manager, ResumeError, TrainingAborted
from .module import Module, NonFiniteLossError, run_forward

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_ABORT = 0, 2, 3


class _at:
    """Re-raise construction errors as ConfigError tagged with the config path."""

    def __init__(self, path: str):
        self.path = path

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, (ConfigError, NonFiniteLossError)) and isinstance(
            exc, (KeyError, TypeError, ValueError, AttributeError, RuntimeError)
        ):
            msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
            raise ConfigError(f"{self.path}: {msg}") from exc
        return False


def build_transform(spec, path: str):
    if isinstance(spec, dict) and "views" in spec:
        return T.MultiViewTransform([build_transform(v, f"{path}.views.{i}") for i, v in enumerate(spec["views"])])
    if not spec:
        return T.ToImage()
    steps = []
    for i, step in enumerate(spec):
        with _at(f"{path}.{i}"):
            steps.append(registry.build("transform", step))
    return T.Compose(*steps)


def build_data(cfg: ExperimentConfig) -> DataModule:
    d = cfg.data
    with _at("data.dataset"):
        train_src = registry.build("dataset", d["dataset"])
    train_ds = FromDataset(train_src, names=d["names"], transform=build_transform(d["train_transform"], "data.train_transform"))
    with _at("data"):
        sampler = RepeatedRandomSampler(train_ds, n_views=d["n_views"], seed=cfg.seed)
        train = make_loader(train_ds, d["batch_size"], sampler=sampler, num_workers=d["num_workers"],
                            drop_last=d["drop_last"], seed=cfg.seed)
    val = None
    if d["val_dataset"]:
        with _at("data.val_dataset"):
            val_src = registry.build("dataset", d["val_dataset"])
        val_ds = FromDataset(val_src, names=d["names"], transform=build_transform(d["val_transform"], "data.val_transform"))
        val = make_loader(val_ds, d["val_batch_size"], num_workers=d["num_workers"], seed=cfg.seed)
    return DataModule(train=train, val=val)


def build_module(cfg: ExperimentConfig) -> Module:
    m = cfg.module
    components = {}
    for name, spec in m["components"].items():
        with _at(f"module.components.{name}"):
            components[name] = registry.build("component", spec)
    with _at("module.forward"):
        forward = registry.resolve("forward", m["forward"])
    with _at("module.optim"):
        return Module(forward=forward, optim=copy.deepcopy(m["optim"]), **components)


def build_callbacks(cfg: ExperimentConfig, module: Module) -> list:
    out = []
    for i, spec in enumerate(cfg.callbacks):
        with _at(f"callbacks.{i}"):
            spec = dict(spec)
            if spec.get("type") == "depth_probes":
                spec.pop("type")
                layers = spec.pop("layers")
                out.extend(depth_probes(module, layers, **spec))
            else:
                out.append(registry.build("callback", spec))
    names = [cb.name for cb in out]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise ConfigError(f"callbacks: duplicate callback names {dupes}")
    return out


def build(cfg: ExperimentConfig, resume: str | None = None) -> Manager:
    data = build_data(cfg)
    module = build_module(cfg)
    callbacks = build_callbacks(cfg, module)
    with _at("trainer"):
        trainer = Trainer(callbacks=callbacks, sinks=[ConsoleSink()], **cfg.trainer)
    return Manager(trainer, module, data, seed=cfg.seed, run_dir=cfg.run_dir, config=cfg.to_dict(),
                   resume=resume)


def dry_run(manager: Manager) -> None:
    """Push one train batch through forward and check callback keys.

    Leaves RNG state and module weights/buffers untouched.
    """
    module, data = manager.module, manager.data
    saved = copy.deepcopy(module.state_dict())
    with torch.random.fork_rng(devices=[]):
        data.set_epoch(data.train, manager.seed, 0)
        batch = to_device(next(iter(data.train)), manager.trainer.device)
        module.to(manager.trainer.device).train()
        with torch.no_grad(), _at("module.forward"):
            try:
                out = run_forward(module, batch, Stage.TRAIN)
            except NonFiniteLossError:
                out = {}  # a training failure, reported by the run itself
    module.load_state_dict(saved)
    if not out:
        return
    for cb in manager.trainer.callbacks:
        for attr in ("input", "target"):
            key = getattr(cb, attr, None)
            if key is not None and key not in out and key not in batch:
                raise ConfigError(f"callback '{cb.name}': {attr} key '{key}' not produced; "
                                  f"forward emitted {sorted(out)}")


def launch(cfg: ExperimentConfig, resume: str | None = None) -> int:
    try:
        manager = build(cfg, resume)
        dry_run(manager)
    except ConfigError as exc:
        logger.error("config error: %s", exc)
        return EXIT_CONFIG
    manager.run_dir.mkdir(parents=True, exist_ok=True)
    resolved = ExperimentConfig.from_dict({**cfg.to_dict(), "run_dir": str(manager.run_dir)})
    resolved.save(Path(manager.run_dir) / "config.yaml")
    try:
        manager.run()
    except ResumeError as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG
    except TrainingAborted as exc:
        logger.error("training aborted: %s", exc)
        return EXIT_ABORT
    return EXIT_OK
