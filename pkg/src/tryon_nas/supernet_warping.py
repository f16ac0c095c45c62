"""Warping supernet: mask encoders plus five searchable multi-scale cells.

Each cell owns three branches (1, 2 or 3 warping blocks) and every block
position holds one zero-initialised flow conv per candidate op, so a
:class:`WarpGenome` selects exactly one path.  The accumulated flow is
carried across cells, upsampled at scale changes, and finally applied to the
full-resolution garment.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .checkpoint import save_checkpoint
from .errors import ArgumentError, ConfigError, ShapeError
from .numerics import Conv, ConvSpec, ensure_finite, grid_warp
from .perceptual import PerceptualLoss
from .search_space import BLOCK_CHOICES, N_CELLS, OP_CODES, OP_TABLE, WarpGenome, sample_warp_genome, serialize
from .synthdata import WARP_KEYS, batches, collate
from .warp import compose_flows, tv_loss, upsample_flow

log = logging.getLogger(__name__)

# encoder stage widths, finest first; the last stage keeps the 1/16 scale
ENCODER_WIDTHS = (16, 32, 32, 64, 64)
ENCODER_STRIDES = (2, 2, 2, 2, 1)
# per cell, coarsest first
CELL_CHANNELS = (64, 64, 32, 32, 16)
CELL_DOWNSAMPLE = (16, 16, 8, 4, 2)

LAMBDA_PERC = 0.1
LAMBDA_TV = 0.3


class MaskEncoder(nn.Module):
    def __init__(self, widths=ENCODER_WIDTHS, strides=ENCODER_STRIDES):
        super().__init__()
        convs = []
        c = 1
        for w, s in zip(widths, strides):
            convs.append(Conv(ConvSpec(3, c, w, stride=s)))
            convs.append(Conv(ConvSpec(3, w, w)))
            c = w
        self.convs = nn.ModuleList(convs)

    def forward(self, mask):
        feats = []
        x = mask
        for i in range(0, len(self.convs), 2):
            x = F.leaky_relu(self.convs[i](x), 0.1)
            x = F.leaky_relu(self.convs[i + 1](x), 0.1)
            feats.append(x)
        # coarsest first, to line up with the cells
        return feats[::-1]


def block_key(cell, branch, block, op):
    return f"c{cell}_n{branch}_b{block}_op{op}"


def make_flow_conv(channels, op):
    if op not in OP_TABLE:
        raise ArgumentError(f"invalid op code {op}; expected one of {OP_CODES}")
    kernel, dw = OP_TABLE[op]
    conv = Conv(ConvSpec(kernel, 2 * channels, 2, depthwise_separable=dw))
    with torch.no_grad():
        # zero output at init; for dw-sep convs only the pointwise half is zeroed
        # so the gradient does not vanish
        for w in conv.weights[1:] if dw else conv.weights:
            w.zero_()
    return conv


def warping_block(src_feat, tgt_feat, acc_flow, conv):
    """One block: estimate a residual flow, warp the source, refine the
    accumulated flow.  Returns ``(warped_src, new_acc_flow, residual_flow)``."""
    if src_feat.shape != tgt_feat.shape:
        raise ShapeError(f"source {tuple(src_feat.shape)} and target {tuple(tgt_feat.shape)} differ")
    flow = conv(torch.cat([src_feat, tgt_feat], dim=1))
    return grid_warp(src_feat, flow), compose_flows(acc_flow, flow), flow


@dataclass
class WarpOutput:
    final_flow: torch.Tensor  # at h/2
    full_flow: torch.Tensor  # at h
    warped_mask: torch.Tensor
    warped_garment: torch.Tensor
    cell_flows: list = field(default_factory=list)
    block_flows: list = field(default_factory=list)


class WarpSupernet(nn.Module):
    def __init__(self, resolution=(96, 128)):
        super().__init__()
        h, w = resolution
        if h % 16 or w % 16:
            raise ConfigError(f"warping resolution {h}x{w} must be divisible by 16")
        self.resolution = (h, w)
        self.source_encoder = MaskEncoder()
        self.target_encoder = MaskEncoder()
        self.blocks = nn.ModuleDict()
        for cell, ch in enumerate(CELL_CHANNELS):
            for n in BLOCK_CHOICES:
                for b in range(n):
                    for op in OP_CODES:
                        self.blocks[block_key(cell, n, b, op)] = make_flow_conv(ch, op)

    def path_keys(self, genome: WarpGenome):
        return [block_key(c, len(ops), b, op) for c, ops in enumerate(genome.cells) for b, op in enumerate(ops)]

    def path_parameter_names(self, genome):
        """Names of every parameter a forward pass with ``genome`` touches."""
        keys = set(self.path_keys(genome))
        return [
            n for n, _ in self.named_parameters()
            if not n.startswith("blocks.") or n.split(".")[1] in keys
        ]

    def encode_masks(self, source_mask, target_mask):
        if source_mask.shape != target_mask.shape:
            raise ShapeError(
                f"source mask {tuple(source_mask.shape)} and target mask {tuple(target_mask.shape)} differ"
            )
        if source_mask.shape[1] != 1:
            raise ShapeError("masks must be single-channel")
        return self.source_encoder(source_mask), self.target_encoder(target_mask)

    def forward(self, genome: WarpGenome, source_mask, target_mask, garment):
        genome.validate()
        if tuple(garment.shape[-2:]) != self.resolution:
            raise ShapeError(f"input size {tuple(garment.shape[-2:])} != configured {self.resolution}")
        src_pyr, tgt_pyr = self.encode_masks(source_mask, target_mask)
        acc = None
        cell_flows, block_flows = [], []
        for cell, ops in enumerate(genome.cells):
            rs, rt = src_pyr[cell], tgt_pyr[cell]
            if acc is None:
                acc = rs.new_zeros(rs.shape[0], 2, *rs.shape[-2:])
            else:
                if acc.shape[-2:] != rs.shape[-2:]:
                    acc = upsample_flow(acc)
                rs = grid_warp(rs, acc)
            for b, op in enumerate(ops):
                rs, acc, f = warping_block(rs, rt, acc, self.blocks[block_key(cell, len(ops), b, op)])
                block_flows.append(f)
            cell_flows.append(acc)
        full = upsample_flow(acc)
        return WarpOutput(
            final_flow=acc,
            full_flow=full,
            warped_mask=grid_warp(source_mask, full),
            warped_garment=grid_warp(garment, full),
            cell_flows=cell_flows,
            block_flows=block_flows,
        )


def warping_loss(out: WarpOutput, target_mask, warped_gt, perceptual: PerceptualLoss,
                 lambda_perc=LAMBDA_PERC, lambda_tv=LAMBDA_TV):
    """Mask L1 + weighted perceptual + weighted TV.

    The summed TV of the half-resolution flow is divided by the
    full-resolution pixel count, the same grid the mask L1 averages over.
    """
    l_mask = (out.warped_mask - target_mask).abs().mean()
    l_perc = perceptual(out.warped_garment, warped_gt)
    h, w = out.warped_mask.shape[-2:]
    l_tv = tv_loss(out.final_flow) / (h * w)
    total = l_mask + lambda_perc * l_perc + lambda_tv * l_tv
    return total, {"mask": l_mask, "perc": l_perc, "tv": l_tv}


def validation_genomes(n=4, seed=2024):
    rng = np.random.default_rng(seed)
    return [sample_warp_genome(rng) for _ in range(n)]


@torch.no_grad()
def evaluate_mask_loss(net, samples, genomes, batch_size=16):
    net.eval()
    total, count = 0.0, 0
    for g in genomes:
        for chunk in batches(samples, batch_size):
            b = collate(chunk, WARP_KEYS)
            out = net(g, b["garment_mask"], b["target_mask"], b["garment"])
            total += float((out.warped_mask - b["target_mask"]).abs().mean()) * len(chunk)
            count += len(chunk)
    return total / max(count, 1)


def train_supernet(net, train_samples, epochs, rng, *, lr=2e-4, betas=(0.5, 0.999), batch_size=8,
                   perceptual=None, val_samples=None, checkpoint_dir=None, seed=None,
                   lambda_perc=LAMBDA_PERC, lambda_tv=LAMBDA_TV, fixed_genome=None,
                   on_step=None, optimizer=None):
    """Single-path training: each step samples a genome and updates its path.

    ``fixed_genome`` turns this into plain training of one sub-network (used
    for fine-tuning).  Returns a history dict.
    """
    if not train_samples:
        raise ConfigError("warping supernet training needs a non-empty dataset")
    perceptual = perceptual or PerceptualLoss()
    opt = optimizer or torch.optim.Adam(net.parameters(), lr=lr, betas=betas)
    history = {"step_loss": [], "val_mask": []}
    genomes = [fixed_genome] if fixed_genome else validation_genomes()
    last = None
    for epoch in range(1, epochs + 1):
        net.train()
        for chunk in batches(train_samples, batch_size, rng):
            genome = fixed_genome or sample_warp_genome(rng)
            b = collate(chunk, WARP_KEYS)
            opt.zero_grad(set_to_none=True)
            out = net(genome, b["garment_mask"], b["target_mask"], b["garment"])
            loss, parts = warping_loss(out, b["target_mask"], b["warped_garment"], perceptual,
                                       lambda_perc, lambda_tv)
            ensure_finite(loss, "warping loss")
            loss.backward()
            opt.step()
            last = genome
            history["step_loss"].append(loss.item())
            if on_step:
                on_step(genome, loss, parts)
        if val_samples:
            history["val_mask"].append(evaluate_mask_loss(net, val_samples, genomes))
            log.info("warp epoch %d: val L_mask %.4f", epoch, history["val_mask"][-1])
        if checkpoint_dir is not None:
            save_checkpoint(checkpoint_dir, f"epoch_{epoch}", net.state_dict(), {
                "kind": "warp_supernet", "epoch": epoch, "seed": seed,
                "resolution": list(net.resolution),
                "last_genome": serialize(last) if last else None,
                "val_mask": history["val_mask"][-1] if history["val_mask"] else None,
            })
    return history
