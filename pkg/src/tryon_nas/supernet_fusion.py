"""Fusion supernet: an encoder-decoder whose skip sources and down/up convs
are chosen per level by a :class:`FusionGenome`.

Encoder level ``i`` halves the resolution with the genome's down kernel and
produces ``E_i``.  Decoder level ``i`` runs at ``E_i``'s resolution: it
concatenates one encoder feature (``same`` = ``E_i``, ``previous`` =
``E_{i+1}``, ``next`` = ``E_{i-1}``; other scales are bilinearly resized and
projected by a 1x1 conv), then upsamples 2x and applies the genome's up
kernel.  Images enter and leave in ``[-1, 1]``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .checkpoint import save_checkpoint
from .errors import ConfigError, ShapeError
from .metrics import ssim_per_image
from .numerics import Conv, ConvSpec, bilinear_resize, ensure_finite
from .perceptual import PerceptualLoss
from .search_space import DOWN_KERNELS, UP_KERNELS, FusionGenome, sample_fusion_genome, serialize
from .synthdata import N_KEYPOINTS, N_PARSING, batches, collate

log = logging.getLogger(__name__)

IN_CHANNELS = 3 + 3 + N_PARSING + N_KEYPOINTS
FUSION_KEYS = ("preserved_person", "warped_garment", "parsing_onehot", "pose", "person", "target_mask")


def default_levels(resolution):
    return 5 if resolution[0] >= 128 else 4


def fusion_input(preserved_person, warped_garment, parsing_onehot, pose):
    """Channel stack I', C~, M_h, P with images mapped from [0,1] to [-1,1]."""
    return torch.cat([preserved_person * 2 - 1, warped_garment * 2 - 1, parsing_onehot, pose], dim=1)


def _act(x):
    # parameter-free instance norm keeps activation scale stable when the
    # sampled path changes every step
    return F.leaky_relu(F.instance_norm(x), 0.2)


def composite(coarse, mask, warped):
    return coarse * (1 - mask) + warped * mask


@dataclass
class FusionOutput:
    coarse: torch.Tensor  # I_c in [-1, 1]
    mask: torch.Tensor  # M_f in [0, 1]
    final: torch.Tensor  # composited try-on image


class FusionSupernet(nn.Module):
    def __init__(self, resolution=(96, 128), levels=None, base_width=64, in_channels=IN_CHANNELS):
        super().__init__()
        self.resolution = tuple(resolution)
        self.levels = levels or default_levels(self.resolution)
        L = self.levels
        h, w = self.resolution
        if h % 2**L or w % 2**L:
            raise ConfigError(f"resolution {h}x{w} must be divisible by {2 ** L} for {L} fusion levels")
        self.in_channels = in_channels
        self.widths = [min(base_width * 2 ** min(i, 3), 512) for i in range(L)]
        dec_out = [self.widths[i - 1] if i else max(base_width // 2, 8) for i in range(L)]
        dec_in = [dec_out[i + 1] if i < L - 1 else self.widths[-1] for i in range(L)]
        self.dec_out = dec_out

        self.down = nn.ModuleDict()
        c = in_channels
        for i in range(L):
            for k in DOWN_KERNELS:
                self.down[f"l{i}_k{k}"] = Conv(ConvSpec(k, c, self.widths[i], stride=2))
            c = self.widths[i]
        self.bottleneck = Conv(ConvSpec(3, self.widths[-1], self.widths[-1]))
        self.proj = nn.ModuleDict()
        self.up = nn.ModuleDict()
        for i in range(L):
            if i < L - 1:
                self.proj[f"l{i}_previous"] = Conv(ConvSpec(1, self.widths[i + 1], self.widths[i]))
            if i > 0:
                self.proj[f"l{i}_next"] = Conv(ConvSpec(1, self.widths[i - 1], self.widths[i]))
            for k in UP_KERNELS:
                self.up[f"l{i}_k{k}"] = Conv(ConvSpec(k, dec_in[i] + self.widths[i], dec_out[i]))
        self.coarse_head = Conv(ConvSpec(3, dec_out[0], 3))
        self.mask_head = Conv(ConvSpec(3, dec_out[0], 1))

    def check_genome(self, genome: FusionGenome) -> FusionGenome:
        genome.validate(self.levels)
        return genome.canonical()

    @staticmethod
    def skip_source(level, skip):
        return {"same": level, "previous": level + 1, "next": level - 1}[skip]

    def path_parameter_names(self, genome):
        g = self.check_genome(genome)
        used = set()
        for i in range(self.levels):
            used.add(f"down.l{i}_k{g.down_ops[i]}.")
            used.add(f"up.l{i}_k{g.up_ops[i]}.")
            if g.skips[i] != "same":
                used.add(f"proj.l{i}_{g.skips[i]}.")
        return [
            n for n, _ in self.named_parameters()
            if n.split(".")[0] not in ("down", "up", "proj") or any(n.startswith(u) for u in used)
        ]

    def encode(self, genome, x):
        feats = []
        for i, k in enumerate(genome.down_ops):
            x = _act(self.down[f"l{i}_k{k}"](x))
            feats.append(x)
        return feats

    def forward(self, genome: FusionGenome, x, warped_garment):
        g = self.check_genome(genome)
        if x.shape[1] != self.in_channels:
            raise ShapeError(f"fusion input has {x.shape[1]} channels, expected {self.in_channels}")
        if tuple(x.shape[-2:]) != self.resolution:
            raise ShapeError(f"fusion input size {tuple(x.shape[-2:])} != configured {self.resolution}")
        feats = self.encode(g, x)
        y = _act(self.bottleneck(feats[-1]))
        for i in reversed(range(self.levels)):
            src = self.skip_source(i, g.skips[i])
            skip = feats[src]
            if src != i:
                skip = self.proj[f"l{i}_{g.skips[i]}"](bilinear_resize(skip, *feats[i].shape[-2:]))
            y = torch.cat([y, skip], dim=1)
            y = bilinear_resize(y, 2 * y.shape[-2], 2 * y.shape[-1])
            y = _act(self.up[f"l{i}_k{g.up_ops[i]}"](y))
        coarse = torch.tanh(self.coarse_head(y))
        mask = torch.sigmoid(self.mask_head(y))
        return FusionOutput(coarse, mask, composite(coarse, mask, warped_garment))


def fusion_loss(out: FusionOutput, person, target_mask, perceptual: PerceptualLoss):
    """Unit-weighted sum of L1 and perceptual terms on the coarse and final
    images plus the fusion-mask L1.  ``person`` is in [-1, 1]."""
    parts = {
        "l1_coarse": (person - out.coarse).abs().mean(),
        "perc_coarse": perceptual(person, out.coarse),
        "l1_final": (person - out.final).abs().mean(),
        "perc_final": perceptual(person, out.final),
        "l1_mask": (target_mask - out.mask).abs().mean(),
    }
    return sum(parts.values()), parts


def prepare_batch(samples, warped_garment=None):
    """Network input, compositing garment and targets for a list of samples.

    ``warped_garment`` (in [0, 1]) overrides the ground-truth warped garment,
    e.g. with the warping network's output.
    """
    b = collate(samples, FUSION_KEYS)
    wg = b["warped_garment"] if warped_garment is None else warped_garment
    x = fusion_input(b["preserved_person"], wg, b["parsing_onehot"], b["pose"])
    return x, wg * 2 - 1, b["person"] * 2 - 1, b["target_mask"]


def validation_genomes(levels, n=4, seed=2024):
    rng = np.random.default_rng(seed)
    return [sample_fusion_genome(rng, levels) for _ in range(n)]


@torch.no_grad()
def evaluate_ssim(net, samples, genomes, batch_size=8):
    net.eval()
    scores = []
    for g in genomes:
        for chunk in batches(samples, batch_size):
            x, wg, person, _ = prepare_batch(chunk)
            out = net(g, x, wg)
            scores.append(ssim_per_image((out.final + 1) / 2, (person + 1) / 2))
    return float(torch.cat(scores).mean()) if scores else float("nan")


def train_fusion_supernet(net, train_samples, epochs, rng, *, lr=1e-4, betas=(0.5, 0.999), batch_size=8,
                          perceptual=None, val_samples=None, checkpoint_dir=None, seed=None,
                          fixed_genome=None, on_step=None, optimizer=None):
    if not train_samples:
        raise ConfigError("fusion supernet training needs a non-empty dataset")
    perceptual = perceptual or PerceptualLoss()
    opt = optimizer or torch.optim.Adam(net.parameters(), lr=lr, betas=betas)
    history = {"step_loss": [], "val_ssim": []}
    genomes = [fixed_genome] if fixed_genome else validation_genomes(net.levels)
    last = None
    for epoch in range(1, epochs + 1):
        net.train()
        for chunk in batches(train_samples, batch_size, rng):
            genome = fixed_genome or sample_fusion_genome(rng, net.levels)
            x, wg, person, tmask = prepare_batch(chunk)
            opt.zero_grad(set_to_none=True)
            out = net(genome, x, wg)
            loss, parts = fusion_loss(out, person, tmask, perceptual)
            ensure_finite(loss, "fusion loss")
            loss.backward()
            opt.step()
            last = genome
            history["step_loss"].append(loss.item())
            if on_step:
                on_step(genome, loss, parts)
        if val_samples:
            history["val_ssim"].append(evaluate_ssim(net, val_samples, genomes))
            log.info("fusion epoch %d: val SSIM %.4f", epoch, history["val_ssim"][-1])
        if checkpoint_dir is not None:
            save_checkpoint(checkpoint_dir, f"epoch_{epoch}", net.state_dict(), {
                "kind": "fusion_supernet", "epoch": epoch, "seed": seed,
                "resolution": list(net.resolution), "levels": net.levels,
                "base_width": net.widths[0],
                "last_genome": serialize(last) if last else None,
                "val_ssim": history["val_ssim"][-1] if history["val_ssim"] else None,
            })
    return history
