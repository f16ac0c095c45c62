"""Perceptual loss over a pluggable, frozen feature extractor."""

from __future__ import annotations

import torch
import torch.nn as nn
import torch.nn.functional as F

# (out_channels, stride) for the six tap stages
DEFAULT_STAGES = ((8, 1), (16, 2), (16, 1), (32, 2), (32, 1), (64, 2))


class RandomConvFeatures(nn.Module):
    """Six frozen conv stages with fixed-seed random weights.

    Stands in for an ImageNet-pretrained backbone.  Any module returning a
    list of feature maps can replace it.
    """

    def __init__(self, in_channels=3, stages=DEFAULT_STAGES, seed=1234):
        super().__init__()
        gen = torch.Generator().manual_seed(seed)
        layers = []
        c = in_channels
        for out, stride in stages:
            conv = nn.Conv2d(c, out, 3, stride, 1)
            with torch.no_grad():
                bound = (6.0 / (9 * c)) ** 0.5
                conv.weight.copy_((torch.rand(conv.weight.shape, generator=gen) * 2 - 1) * bound)
                conv.bias.zero_()
            layers.append(conv)
            c = out
        self.layers = nn.ModuleList(layers)
        self.requires_grad_(False)

    def train(self, mode=True):
        # always frozen
        return super().train(False)

    def forward(self, x):
        feats = []
        for conv in self.layers:
            x = F.leaky_relu(conv(x), 0.2)
            feats.append(x)
        return feats


def default_layer_weights(n=6):
    # deeper taps weigh more: 1/2^(n-1-k)
    return tuple(1.0 / 2 ** (n - 1 - k) for k in range(n))


class PerceptualLoss(nn.Module):
    def __init__(self, extractor=None, layer_weights=None):
        super().__init__()
        self.extractor = extractor if extractor is not None else RandomConvFeatures()
        self.layer_weights = layer_weights or default_layer_weights(len(self.extractor.layers))

    def forward(self, x, y):
        fx, fy = self.extractor(x), self.extractor(y)
        return sum(w * (a - b).abs().mean() for w, a, b in zip(self.layer_weights, fx, fy))
