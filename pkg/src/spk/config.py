"""Experiment configs: YAML files plus ``dotted.key=value`` overrides."""

from __future__ import annotations

import copy
import difflib
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import yaml


class ConfigError(ValueError):
    pass


DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "run_dir": "runs/default",
    "data": {
        "dataset": {},
        "val_dataset": {},
        "names": ["image", "label"],
        "train_transform": [],
        "val_transform": [],
        "n_views": 2,
        "batch_size": 256,
        "val_batch_size": 256,
        "num_workers": 0,
        "drop_last": True,
    },
    "module": {
        "forward": "simclr",
        "components": {},
        "optim": {
            "optimizer": {"type": "LARS", "lr": 5.0, "weight_decay": 1e-6},
            "scheduler": {"type": "LinearWarmupCosineAnnealing"},
            "interval": "epoch",
        },
    },
    "trainer": {
        "max_epochs": 1,
        "precision": "32",
        "deterministic": True,
        "device": None,
        "limit_train_batches": None,
        "limit_val_batches": None,
        "check_val_every_n_epoch": 1,
    },
    "callbacks": [],
}

# subtrees whose keys are free-form (constructor kwargs)
_OPEN = {("data", "dataset"), ("data", "val_dataset"), ("module", "components"),
         ("module", "optim", "optimizer"), ("module", "optim", "scheduler")}


@dataclass
class ExperimentConfig:
    data: dict = field(default_factory=dict)
    module: dict = field(default_factory=dict)
    trainer: dict = field(default_factory=dict)
    callbacks: list = field(default_factory=list)
    seed: int = 0
    run_dir: str = "runs/default"

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(**copy.deepcopy(d))

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_yaml(), encoding="utf-8")
        return path

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


def _merge(base: dict, update: dict, path: tuple = ()) -> dict:
    out = copy.deepcopy(base)
    for key, value in update.items():
        here = path + (key,)
        if key not in base and path not in _OPEN:
            raise ConfigError(_unknown(".".join(map(str, here)), base, path, key))
        current = base.get(key)
        if isinstance(value, dict) and isinstance(current, dict):
            out[key] = _merge(current, value, here)
        elif isinstance(current, float) and isinstance(value, int) and not isinstance(value, bool):
            out[key] = float(value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _unknown(dotted: str, parent: dict, path: tuple, key: str) -> str:
    prefix = ".".join(path)
    close = difflib.get_close_matches(str(key), [str(k) for k in parent], n=3, cutoff=0.5)
    hint = ", ".join(f"{prefix + '.' if prefix else ''}{c}" for c in close)
    msg = f"unknown config key '{dotted}'"
    return f"{msg}; did you mean {hint}?" if hint else f"{msg}; valid keys here: {sorted(map(str, parent))}"


def _parse_scalar(text: str) -> Any:
    value = yaml.safe_load(text) if text.strip() else ""
    if isinstance(value, str):
        try:
            return float(value)  # yaml 1.1 reads "1e-6" as a string
        except ValueError:
            return value
    return value


def _coerce(text: str, current: Any, dotted: str) -> Any:
    try:
        if isinstance(current, bool):
            low = text.strip().lower()
            if low not in ("true", "false"):
                raise ValueError(f"expected true/false, got {text!r}")
            return low == "true"
        if isinstance(current, int):
            value = _parse_scalar(text)
            if isinstance(value, float) and value.is_integer():
                value = int(value)
            if not isinstance(value, int) or isinstance(value, bool):
                raise ValueError(f"expected an integer, got {text!r}")
            return value
        if isinstance(current, float):
            return float(text)
        if isinstance(current, str):
            return text
    except ValueError as exc:
        raise ConfigError(f"override {dotted}: {exc}") from exc
    return _parse_scalar(text)


def apply_override(cfg: dict, override: str) -> None:
    if "=" not in override:
        raise ConfigError(f"override {override!r} must look like dotted.key=value")
    dotted, text = override.split("=", 1)
    parts = dotted.strip().split(".")
    node: Any = cfg
    for i, part in enumerate(parts):
        path = tuple(parts[:i])
        last = i == len(parts) - 1
        if isinstance(node, list):
            if not part.isdigit() or int(part) >= len(node):
                raise ConfigError(f"'{dotted}': index {part!r} out of range for list of {len(node)}")
            key: Any = int(part)
        else:
            key = part
            if key not in node:
                if last and path in _OPEN:
                    node[key] = _parse_scalar(text)
                    return
                raise ConfigError(_unknown(dotted, node, path, key))
        if last:
            node[key] = _coerce(text, node[key], dotted)
        else:
            node = node[key]


def load_config(path: str | Path, overrides=()) -> ExperimentConfig:
    """Read ``path``, merge over the defaults, then apply overrides left to right."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark else str(path)
        raise ConfigError(f"{where}: {exc.problem}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    cfg = _merge(DEFAULTS, raw)
    for override in overrides:
        apply_override(cfg, override)
    return ExperimentConfig.from_dict(cfg)
