from __future__ import annotations

import torch
import torchvision
from torch import nn


def _conv_block(c_in: int, c_out: int, stride: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(c_in, c_out, 3, stride, 1, bias=False),
        nn.BatchNorm2d(c_out),
        nn.ReLU(inplace=True),
    )


class SmallConvNet(nn.Module):
    """Four conv blocks (block1..block4) and global average pooling."""

    def __init__(self, widths=(32, 64, 128, 128), in_channels: int = 3):
        super().__init__()
        self.block1 = _conv_block(in_channels, widths[0], 1)
        self.block2 = _conv_block(widths[0], widths[1], 2)
        self.block3 = _conv_block(widths[1], widths[2], 2)
        self.block4 = _conv_block(widths[2], widths[3], 2)
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.out_dim = widths[3]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = self.block4(self.block3(self.block2(self.block1(x))))
        return self.pool(x).flatten(1)


def from_torchvision(name: str, low_resolution: bool = False, **kwargs) -> nn.Module:
    """Instantiate an untrained torchvision model; ``low_resolution`` adapts
    ResNet stems to 32x32 inputs."""
    model = getattr(torchvision.models, name)(weights=None, **kwargs)
    if low_resolution and hasattr(model, "conv1"):
        model.conv1 = nn.Conv2d(3, model.conv1.out_channels, 3, 1, 1, bias=False)
        model.maxpool = nn.Identity()
    return model


def mlp(in_dim: int, hidden_dim: int, out_dim: int, n_layers: int = 2) -> nn.Sequential:
    """Projector: (Linear, BatchNorm, ReLU) x (n_layers - 1) then Linear."""
    layers: list[nn.Module] = []
    d = in_dim
    for _ in range(n_layers - 1):
        layers += [nn.Linear(d, hidden_dim), nn.BatchNorm1d(hidden_dim), nn.ReLU(inplace=True)]
        d = hidden_dim
    layers.append(nn.Linear(d, out_dim))
    return nn.Sequential(*layers)
