"""UNet with configurable depth, double-conv blocks, and batch normalization.

Output is a per-pixel pore probability in [0, 1] at the input resolution.
"""
from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn


@dataclass
class UNetSpec:
    depth: int = 4  # contracting blocks
    base_channels: int = 16
    in_channels: int = 1

    def validate(self) -> None:
        if self.depth < 1 or self.base_channels < 1 or self.in_channels < 1:
            raise ValueError("depth, base_channels, in_channels must be >= 1")


def _double_conv(cin: int, cout: int) -> nn.Sequential:
    # batch norm precedes the activation in every convolutional block
    return nn.Sequential(
        nn.Conv2d(cin, cout, 3, padding=1, bias=False),
        nn.BatchNorm2d(cout),
        nn.ReLU(inplace=True),
        nn.Conv2d(cout, cout, 3, padding=1, bias=False),
        nn.BatchNorm2d(cout),
        nn.ReLU(inplace=True),
    )


class UNet(nn.Module):
    def __init__(self, spec: UNetSpec | None = None):
        super().__init__()
        self.spec = spec or UNetSpec()
        self.spec.validate()
        ch = self.spec.base_channels
        self.down = nn.ModuleList()
        cin = self.spec.in_channels
        for d in range(self.spec.depth):
            self.down.append(_double_conv(cin, ch * 2 ** d))
            cin = ch * 2 ** d
        self.pool = nn.MaxPool2d(2)
        self.bottleneck = _double_conv(cin, cin * 2)
        self.up = nn.ModuleList()
        self.up_conv = nn.ModuleList()
        for d in reversed(range(self.spec.depth)):
            cout = ch * 2 ** d
            self.up.append(nn.ConvTranspose2d(cout * 2, cout, 2, stride=2))
            self.up_conv.append(_double_conv(cout * 2, cout))
        self.head = nn.Conv2d(ch, 1, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        skips = []
        for block in self.down:
            x = block(x)
            skips.append(x)
            x = self.pool(x)
        x = self.bottleneck(x)
        for tconv, block, skip in zip(self.up, self.up_conv, reversed(skips)):
            x = tconv(x)
            x = block(torch.cat([x, skip], dim=1))
        return torch.sigmoid(self.head(x))

    def logits(self, x: torch.Tensor) -> torch.Tensor:
        """Pre-sigmoid output, for numerically stable BCE-with-logits training."""
        skips = []
        for block in self.down:
            x = block(x)
            skips.append(x)
            x = self.pool(x)
        x = self.bottleneck(x)
        for tconv, block, skip in zip(self.up, self.up_conv, reversed(skips)):
            x = tconv(x)
            x = block(torch.cat([x, skip], dim=1))
        return self.head(x)


def layer_count(model: UNet) -> int:
    """Conv + batch-norm + transposed-conv layer count (see README table)."""
    return sum(1 for m in model.modules()
               if isinstance(m, (nn.Conv2d, nn.BatchNorm2d, nn.ConvTranspose2d)))
