"""Differentiable primitives used by every network in the package.

All tensors use the (batch, channel, height, width) layout.  Training runs in
float32; float64 is only used by :func:`gradient_check`.  Autograd is provided
by torch, the wrappers here own validation and the padding/sampling
conventions.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import ArgumentError, NumericalError, ShapeError

KERNELS = (1, 3, 4, 5)


@dataclass(frozen=True)
class ConvSpec:
    kernel: int
    in_channels: int
    out_channels: int
    stride: int = 1
    depthwise_separable: bool = False

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ArgumentError(f"kernel must be one of {KERNELS}, got {self.kernel}")
        if self.stride not in (1, 2):
            raise ArgumentError(f"stride must be 1 or 2, got {self.stride}")
        if self.in_channels < 1 or self.out_channels < 1:
            raise ArgumentError("channel counts must be positive")
        if self.depthwise_separable and self.kernel not in (1, 3):
            raise ArgumentError("depthwise-separable convs only support kernels 1 and 3")
        if self.kernel % 2 == 0 and self.stride != 2:
            raise ArgumentError("even kernels are only allowed with stride 2")

    @property
    def padding(self) -> int:
        # keeps H at stride 1 and gives H/2 at stride 2 (even H) for k in {1,3,4,5}
        return (self.kernel - 1) // 2

    def weight_shapes(self):
        k = self.kernel
        if self.depthwise_separable:
            return [
                (self.in_channels, 1, k, k),
                (self.out_channels, self.in_channels, 1, 1),
                (self.out_channels,),
            ]
        return [(self.out_channels, self.in_channels, k, k), (self.out_channels,)]


def _check4(x, name):
    if x.dim() != 4:
        raise ShapeError(f"{name} must be 4-D (B, C, H, W), got shape {tuple(x.shape)}")


def conv2d(x: torch.Tensor, spec: ConvSpec, weights) -> torch.Tensor:
    """Apply the convolution described by ``spec`` with explicit ``weights``.

    ``weights`` is ``(weight, bias)`` for a plain conv and
    ``(depthwise, pointwise, bias)`` for a depthwise-separable one.
    """
    _check4(x, "x")
    if x.shape[1] != spec.in_channels:
        raise ShapeError(
            f"input x has {x.shape[1]} channels, spec expects {spec.in_channels}"
        )
    shapes = spec.weight_shapes()
    if len(weights) != len(shapes):
        raise ShapeError(f"expected {len(shapes)} weight tensors, got {len(weights)}")
    for i, (w, s) in enumerate(zip(weights, shapes)):
        if tuple(w.shape) != s:
            raise ShapeError(f"weights[{i}] has shape {tuple(w.shape)}, expected {s}")
    p = spec.padding
    if spec.depthwise_separable:
        dw, pw, b = weights
        y = F.conv2d(x, dw, None, spec.stride, p, groups=spec.in_channels)
        return F.conv2d(y, pw, b)
    w, b = weights
    return F.conv2d(x, w, b, spec.stride, p)


class Conv(nn.Module):
    """Parameter holder for one :class:`ConvSpec`."""

    def __init__(self, spec: ConvSpec, zero_init: bool = False):
        super().__init__()
        self.spec = spec
        self.weights = nn.ParameterList(
            [nn.Parameter(torch.empty(s)) for s in spec.weight_shapes()]
        )
        if zero_init:
            for w in self.weights:
                nn.init.zeros_(w)
        else:
            self.reset_parameters()

    def reset_parameters(self):
        for w in self.weights:
            if w.dim() > 1:
                nn.init.kaiming_uniform_(w, a=0.2)
            else:
                nn.init.zeros_(w)

    def forward(self, x):
        return conv2d(x, self.spec, list(self.weights))


def bilinear_resize(x: torch.Tensor, target_h: int, target_w: int) -> torch.Tensor:
    """Bilinear resize with the align-corners=False (half-pixel) convention."""
    _check4(x, "x")
    if target_h < 1 or target_w < 1:
        raise ArgumentError(f"target size must be positive, got {target_h}x{target_w}")
    if (target_h, target_w) == tuple(x.shape[-2:]):
        return x
    return F.interpolate(x, size=(target_h, target_w), mode="bilinear", align_corners=False)


def _base_grid(h, w, like):
    ys = torch.arange(h, dtype=like.dtype, device=like.device)
    xs = torch.arange(w, dtype=like.dtype, device=like.device)
    gy, gx = torch.meshgrid(ys, xs, indexing="ij")
    return gx, gy


def grid_warp(x: torch.Tensor, flow: torch.Tensor) -> torch.Tensor:
    """Backward warp: ``out(p) = x(p + flow(p))``, bilinear, border-clamped.

    ``flow`` holds (dx, dy) in pixels of ``x``'s resolution.  Its batch
    dimension must match ``x`` or be 1.
    """
    _check4(x, "x")
    _check4(flow, "flow")
    if flow.shape[1] != 2:
        raise ShapeError(f"flow must have 2 channels, got {flow.shape[1]}")
    if flow.shape[-2:] != x.shape[-2:]:
        raise ShapeError(
            f"flow size {tuple(flow.shape[-2:])} does not match x size {tuple(x.shape[-2:])}"
        )
    if flow.shape[0] not in (1, x.shape[0]):
        raise ShapeError(f"flow batch {flow.shape[0]} incompatible with x batch {x.shape[0]}")
    b, _, h, w = x.shape
    gx, gy = _base_grid(h, w, flow)
    px = gx + flow[:, 0]
    py = gy + flow[:, 1]
    nx = 2.0 * px / (w - 1) - 1.0 if w > 1 else px * 0.0
    ny = 2.0 * py / (h - 1) - 1.0 if h > 1 else py * 0.0
    grid = torch.stack((nx, ny), dim=-1)
    if grid.shape[0] != b:
        grid = grid.expand(b, -1, -1, -1)
    return F.grid_sample(x, grid, mode="bilinear", padding_mode="border", align_corners=True)


def ensure_finite(t: torch.Tensor, name: str = "tensor") -> torch.Tensor:
    if not torch.isfinite(t).all():
        raise NumericalError(f"non-finite values in {name}")
    return t


def gradient_check(fn, tensors, eps=1e-6, max_entries=64, seed=0):
    """Compare autograd gradients of ``fn()`` against central differences.

    ``fn`` is a closure over ``tensors`` (float64 leaves with
    ``requires_grad``).  Non-scalar outputs are reduced with a fixed random
    projection.  At most ``max_entries`` randomly chosen entries per tensor are
    checked.  Returns the relative error ``||a - n|| / max(||a||, ||n||)``.
    """
    gen = torch.Generator().manual_seed(seed)
    out = fn()
    proj = torch.randn(out.shape, generator=gen, dtype=torch.float64) if out.dim() else None

    def scalar():
        o = fn()
        return o if proj is None else (o * proj).sum()

    grads = torch.autograd.grad(scalar(), tensors, allow_unused=True)
    analytic, numeric = [], []
    with torch.no_grad():
        for t, g in zip(tensors, grads):
            g = torch.zeros_like(t) if g is None else g
            flat = t.data.view(-1)
            n = flat.numel()
            idx = torch.randperm(n, generator=gen)[:max_entries]
            for i in idx.tolist():
                orig = flat[i].item()
                flat[i] = orig + eps
                up = scalar().item()
                flat[i] = orig - eps
                down = scalar().item()
                flat[i] = orig
                numeric.append((up - down) / (2 * eps))
                analytic.append(g.reshape(-1)[i].item())
    a = torch.tensor(analytic, dtype=torch.float64)
    nm = torch.tensor(numeric, dtype=torch.float64)
    denom = max(a.norm().item(), nm.norm().item(), 1e-12)
    return (a - nm).norm().item() / denom
