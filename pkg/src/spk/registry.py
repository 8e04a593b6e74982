"""String name -> constructor tables so experiment configs stay plain data."""

from __future__ import annotations

from typing import Callable

import torch

from . import backbones, forwards, losses
from .callbacks import LiDAR, OnlineKNN, OnlineProbe, RankMe
from .data import transforms as T
from .data.synthetic import SyntheticShapes

REGISTRIES: dict[str, dict[str, Callable]] = {
    "dataset": {},
    "transform": {},
    "component": {},
    "forward": {},
    "callback": {},
}


def register(kind: str, name: str):
    def deco(fn):
        REGISTRIES[kind][name] = fn
        return fn
    return deco


def resolve(kind: str, name: str) -> Callable:
    table = REGISTRIES[kind]
    if name not in table:
        raise KeyError(f"unknown {kind} type {name!r}; registered: {sorted(table)}")
    return table[name]


def build(kind: str, spec: dict):
    spec = dict(spec)
    if "type" not in spec:
        raise KeyError(f"{kind} spec needs a 'type' key, got {sorted(spec)}")
    return resolve(kind, spec.pop("type"))(**spec)


# datasets --------------------------------------------------------------------
register("dataset", "synthetic_shapes")(SyntheticShapes)


@register("dataset", "cifar10")
def _cifar10(root: str = "data", train: bool = True, download: bool = False):
    import torchvision

    return torchvision.datasets.CIFAR10(root=root, train=train, download=download)


# transform steps ---------------------------------------------------------------
for _name, _cls in {
    "rgb": T.RGB,
    "to_image": T.ToImage,
    "random_resized_crop": T.RandomResizedCrop,
    "resize": T.Resize,
    "random_horizontal_flip": T.RandomHorizontalFlip,
    "color_jitter": T.ColorJitter,
    "random_grayscale": T.RandomGrayscale,
    "random_solarize": T.RandomSolarize,
    "normalize": T.Normalize,
}.items():
    register("transform", _name)(_cls)

# model components ----------------------------------------------------------------
register("component", "small_convnet")(backbones.SmallConvNet)
register("component", "torchvision")(backbones.from_torchvision)
register("component", "mlp")(backbones.mlp)
register("component", "nt_xent")(losses.NTXEntLoss)
register("component", "linear")(torch.nn.Linear)
register("component", "identity")(torch.nn.Identity)

# forward functions ----------------------------------------------------------------
register("forward", "simclr")(forwards.simclr_forward)
register("forward", "embedding")(forwards.embedding_forward)

# callbacks (depth_probes is expanded by the launcher) -----------------------------
register("callback", "online_probe")(OnlineProbe)
register("callback", "online_knn")(OnlineKNN)
register("callback", "rankme")(RankMe)
register("callback", "lidar")(LiDAR)
register("callback", "depth_probes")(lambda **kw: kw)
