"""Sectioned single-file checkpoints (a zip archive, one member per section)."""

from __future__ import annotations

import io
import json
import logging
import os
import tempfile
import zipfile
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import torch

from . import __version__

logger = logging.getLogger(__name__)

TENSOR_SECTIONS = ("weights", "optimizer", "scheduler", "rng", "queues", "callbacks")


class CheckpointError(RuntimeError):
    def __init__(self, section: str, path, cause: Exception | str):
        self.section = section
        super().__init__(f"checkpoint {path}: cannot read section '{section}': {cause}")


@dataclass
class CheckpointState:
    weights: dict
    optimizer: dict | None = None
    scheduler: dict | None = None
    global_step: int = 0
    epoch: int = 0  # completed epochs
    rng: dict = field(default_factory=dict)
    queues: dict = field(default_factory=dict)
    callbacks: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    config_hash: str = ""
    version: str = __version__


def _dump(obj) -> bytes:
    buf = io.BytesIO()
    torch.save(obj, buf)
    return buf.getvalue()


def save_checkpoint(state: CheckpointState, path: str | Path) -> Path:
    """Write ``state`` atomically (temp file + rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh, zipfile.ZipFile(fh, "w", zipfile.ZIP_STORED) as zf:
            for name in TENSOR_SECTIONS:
                zf.writestr(name, _dump(getattr(state, name)))
            progress = {"global_step": state.global_step, "epoch": state.epoch}
            zf.writestr("progress", json.dumps(progress))
            zf.writestr("config", json.dumps({"config": state.config, "hash": state.config_hash}))
            zf.writestr("version", state.version)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def load_checkpoint(path: str | Path) -> CheckpointState:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    try:
        zf = zipfile.ZipFile(path, "r")
    except zipfile.BadZipFile as exc:
        raise CheckpointError("archive", path, exc) from exc
    values: dict[str, Any] = {}
    with zf:
        def read(section: str) -> bytes:
            try:
                return zf.read(section)
            except (KeyError, zipfile.BadZipFile, OSError, EOFError) as exc:
                raise CheckpointError(section, path, exc) from exc

        for name in TENSOR_SECTIONS:
            raw = read(name)
            try:
                values[name] = torch.load(io.BytesIO(raw), weights_only=False, map_location="cpu")
            except Exception as exc:
                raise CheckpointError(name, path, exc) from exc
        for name in ("progress", "config"):
            try:
                values[name] = json.loads(read(name).decode("utf-8"))
            except CheckpointError:
                raise
            except Exception as exc:
                raise CheckpointError(name, path, exc) from exc
        version = read("version").decode("utf-8")
    if version != __version__:
        logger.warning("checkpoint %s was written by version %s, running %s", path, version, __version__)
    return CheckpointState(
        weights=values["weights"], optimizer=values["optimizer"], scheduler=values["scheduler"],
        global_step=values["progress"]["global_step"], epoch=values["progress"]["epoch"],
        rng=values["rng"], queues=values["queues"], callbacks=values["callbacks"],
        config=values["config"]["config"], config_hash=values["config"]["hash"], version=version,
    )


def _equal(a, b) -> bool:
    if isinstance(a, torch.Tensor) or isinstance(b, torch.Tensor):
        return (isinstance(a, torch.Tensor) and isinstance(b, torch.Tensor) and a.dtype == b.dtype
                and a.shape == b.shape and torch.equal(a, b))
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(_equal(a[k], b[k]) for k in a)
    if isinstance(a, (list, tuple)) and isinstance(b, (list, tuple)):
        return len(a) == len(b) and all(_equal(x, y) for x, y in zip(a, b))
    if hasattr(a, "shape") and hasattr(b, "shape"):  # numpy arrays
        import numpy as np
        return np.array_equal(a, b)
    return a == b


def states_equal(a: CheckpointState, b: CheckpointState) -> list[str]:
    """Names of the fields that differ (empty when bit-identical)."""
    return [f.name for f in fields(CheckpointState) if not _equal(getattr(a, f.name), getattr(b, f.name))]
