"""Modular self-supervised pretraining: dict batches, one stage-aware forward,
a checkpointing Manager and monitoring callbacks over a shared feature queue."""

__version__ = "0.1.0"

from . import backbones, callbacks, data, forwards, losses, metrics, optim  # noqa: E402
from .batch import Stage, fold_views, validate_batch  # noqa: E402
from .checkpoint import CheckpointState, load_checkpoint, save_checkpoint  # noqa: E402
from .engine import Trainer  # noqa: E402
from .manager import Manager, ResumeError, TrainingAborted, seed_everything  # noqa: E402
from .module import Module, NonFiniteLossError, run_forward  # noqa: E402

__all__ = [
    "CheckpointState",
    "Manager",
    "Module",
    "NonFiniteLossError",
    "ResumeError",
    "Stage",
    "Trainer",
    "TrainingAborted",
    "backbones",
    "callbacks",
    "data",
    "forwards",
    "fold_views",
    "load_checkpoint",
    "losses",
    "metrics",
    "optim",
    "run_forward",
    "save_checkpoint",
    "seed_everything",
    "validate_batch",
]
