"""SSIM, mask IoU and metric-row IO."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from .errors import ShapeError


@dataclass(frozen=True)
class SsimConfig:
    window: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    data_range: float = 1.0

    def kernel1d(self, dtype=torch.float64):
        x = torch.arange(self.window, dtype=dtype) - (self.window - 1) / 2
        g = torch.exp(-(x**2) / (2 * self.sigma**2))
        return g / g.sum()


def _as_batch(x):
    t = torch.as_tensor(np.asarray(x) if not isinstance(x, torch.Tensor) else x)
    t = t.detach().to(torch.float64)
    if t.dim() == 2:
        t = t[None, None]
    elif t.dim() == 3:
        t = t[None]
    if t.dim() != 4:
        raise ShapeError(f"ssim expects 2-D to 4-D input, got {tuple(t.shape)}")
    return t


def ssim_per_image(a, b, cfg: SsimConfig = SsimConfig()) -> torch.Tensor:
    """Mean local SSIM per batch item over valid window positions,
    averaged over channels.  Inputs are expected in ``[0, data_range]``."""
    x, y = _as_batch(a), _as_batch(b)
    if x.shape != y.shape:
        raise ShapeError(f"ssim inputs differ in shape: {tuple(x.shape)} vs {tuple(y.shape)}")
    b_, c, h, w = x.shape
    if h < cfg.window or w < cfg.window:
        raise ShapeError(f"image {h}x{w} smaller than the {cfg.window}x{cfg.window} window")
    g = cfg.kernel1d()
    kx = g.view(1, 1, 1, -1).repeat(c, 1, 1, 1)
    ky = g.view(1, 1, -1, 1).repeat(c, 1, 1, 1)

    def blur(t):
        return F.conv2d(F.conv2d(t, kx, groups=c), ky, groups=c)

    mu_x, mu_y = blur(x), blur(y)
    sxx = blur(x * x) - mu_x**2
    syy = blur(y * y) - mu_y**2
    sxy = blur(x * y) - mu_x * mu_y
    c1 = (cfg.k1 * cfg.data_range) ** 2
    c2 = (cfg.k2 * cfg.data_range) ** 2
    smap = ((2 * mu_x * mu_y + c1) * (2 * sxy + c2)) / (
        (mu_x**2 + mu_y**2 + c1) * (sxx + syy + c2)
    )
    return smap.mean(dim=(1, 2, 3))


def ssim(a, b, cfg: SsimConfig = SsimConfig()) -> float:
    return float(ssim_per_image(a, b, cfg).mean())


def mask_iou(a, b) -> float:
    a = np.asarray(a.detach().cpu() if isinstance(a, torch.Tensor) else a) > 0.5
    b = np.asarray(b.detach().cpu() if isinstance(b, torch.Tensor) else b) > 0.5
    if a.shape != b.shape:
        raise ShapeError(f"mask shapes differ: {a.shape} vs {b.shape}")
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(a, b).sum() / union)


METRIC_FIELDS = ("run_id", "split", "metric", "value")


def append_metric_rows(path, rows):
    """Append ``(run_id, split, metric, value)`` rows to a CSV file."""
    path = Path(path)
    new = not path.exists()
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if new:
            writer.writerow(METRIC_FIELDS)
        for r in rows:
            writer.writerow([r[0], r[1], r[2], f"{float(r[3]):.6f}"])


def read_metric_rows(path):
    with open(path, newline="") as fh:
        return [
            {**row, "value": float(row["value"])} for row in csv.DictReader(fh)
        ]
