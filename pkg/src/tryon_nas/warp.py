"""Flow-field algebra.

A flow is a ``(B, 2, h, w)`` tensor of backward displacements ``(dx, dy)`` in
pixels of its own resolution: warping ``x`` by ``f`` samples ``x`` at
``p + f(p)``.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
import torch

from .errors import ArgumentError, ShapeError
from .numerics import bilinear_resize, grid_warp

FLOW_MAGIC = b"WFLO"


def check_flow(f: torch.Tensor, name="flow"):
    if f.dim() != 4 or f.shape[1] != 2:
        raise ShapeError(f"{name} must have shape (B, 2, h, w), got {tuple(f.shape)}")
    return f


def zero_flow(batch, h, w, like=None):
    kw = {} if like is None else {"dtype": like.dtype, "device": like.device}
    return torch.zeros(batch, 2, h, w, **kw)


def compose_flows(accumulated: torch.Tensor, new: torch.Tensor) -> torch.Tensor:
    """Flow equivalent to warping by ``accumulated`` and then by ``new``.

    ``result(p) = accumulated(p + new(p)) + new(p)``.
    """
    check_flow(accumulated, "accumulated")
    check_flow(new, "new")
    if accumulated.shape[-2:] != new.shape[-2:]:
        raise ShapeError(
            f"flow resolutions differ: {tuple(accumulated.shape[-2:])} vs {tuple(new.shape[-2:])}"
        )
    return grid_warp(accumulated, new) + new


def upsample_flow(f: torch.Tensor, factor: int = 2) -> torch.Tensor:
    check_flow(f)
    if factor != 2:
        raise ArgumentError(f"only factor 2 is supported, got {factor}")
    h, w = f.shape[-2:]
    return bilinear_resize(f, 2 * h, 2 * w) * 2.0


def tv_loss(f: torch.Tensor) -> torch.Tensor:
    """Anisotropic total variation: L1 of forward differences, summed over
    both channels and all positions, averaged over the batch."""
    check_flow(f)
    dx = (f[..., :, 1:] - f[..., :, :-1]).abs().sum(dim=(1, 2, 3))
    dy = (f[..., 1:, :] - f[..., :-1, :]).abs().sum(dim=(1, 2, 3))
    return (dx + dy).mean()


def save_flow(path, f):
    """Write one flow as magic, int32 h, int32 w, then float32 (2, h, w) data."""
    arr = f.detach().cpu().numpy() if isinstance(f, torch.Tensor) else np.asarray(f)
    if arr.ndim == 4:
        if arr.shape[0] != 1:
            raise ShapeError("save_flow writes a single flow; got a batch")
        arr = arr[0]
    if arr.ndim != 3 or arr.shape[0] != 2:
        raise ShapeError(f"flow must be (2, h, w), got {arr.shape}")
    h, w = arr.shape[1:]
    with open(path, "wb") as fh:
        fh.write(FLOW_MAGIC)
        fh.write(struct.pack("<ii", h, w))
        fh.write(arr.astype("<f4").tobytes())


def load_flow(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:4] != FLOW_MAGIC:
        raise ArgumentError(f"{path}: not a flow file (bad magic)")
    h, w = struct.unpack("<ii", raw[4:12])
    data = np.frombuffer(raw[12:], dtype="<f4")
    if data.size != 2 * h * w:
        raise ShapeError(f"{path}: payload has {data.size} values, header says {2 * h * w}")
    return data.reshape(2, h, w).astype(np.float32)
