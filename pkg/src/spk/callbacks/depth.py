from __future__ import annotations

import torch
from torch import nn

from .probe import OnlineProbe

REDUCTIONS = ("mean", "token_mean", "flatten")


def _reduce(x: torch.Tensor, reduction: str) -> torch.Tensor:
    if isinstance(x, (tuple, list)):
        x = x[0]
    x = x.detach()
    if x.dim() <= 2:
        return x
    if reduction == "mean":
        return x.flatten(2).mean(dim=2)
    if reduction == "token_mean":
        return x.mean(dim=1).flatten(1)
    return x.flatten(1)


def resolve_layer(module: nn.Module, layer_name: str) -> nn.Module:
    """Find a sub-block by dotted path (``backbone.layer2``) or unique suffix."""
    named = dict(module.named_modules())
    if layer_name in named and layer_name:
        return named[layer_name]
    matches = [n for n in named if n.endswith("." + layer_name)]
    if len(matches) == 1:
        return named[matches[0]]
    candidates = sorted(n for n in named if n)
    if len(matches) > 1:
        raise KeyError(f"layer name '{layer_name}' is ambiguous: {sorted(matches)}")
    raise KeyError(f"no layer named '{layer_name}'; available: {candidates}")


def attach_depth_probes(module, layer_names, reduction: str = "mean") -> list[str]:
    """Capture the outputs of ``layer_names`` into the forward output.

    Each layer's activation is reduced (global average pooling by default)
    and exposed under ``embedding::<layer_name>``. Returns the new keys.
    """
    if reduction not in REDUCTIONS:
        raise ValueError(f"unknown reduction {reduction!r}; choose from {REDUCTIONS}")
    layers = {name: resolve_layer(module, name) for name in layer_names}
    keys = []
    for name, layer in layers.items():
        key = f"embedding::{name}"

        def hook(_mod, _inp, output, key=key):
            module.captures[key] = _reduce(output, reduction)

        layer.register_forward_hook(hook)
        keys.append(key)
    return keys


def depth_probes(module, layer_names, num_classes: int, target: str = "label", reduction: str = "mean",
                 metrics=("top1",), optimizer: dict | None = None) -> list[OnlineProbe]:
    """Attach captures and return one linear :class:`OnlineProbe` per layer."""
    keys = attach_depth_probes(module, layer_names, reduction)
    return [
        OnlineProbe(name=f"probe_{name}", input=key, target=target, num_classes=num_classes,
                    metrics=list(metrics), optimizer=optimizer)
        for name, key in zip(layer_names, keys)
    ]
