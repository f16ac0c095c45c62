"""Partial parsing prediction: which pixels the try-on will change.

The generator encodes the person condition (blurred body shape, pose, head,
flat garment), warps separately encoded garment features with a predicted
affine transform, and decodes through six residual blocks into logits over
the partial-parsing classes.  It is trained adversarially against a
conditional patch discriminator with feature matching and pixel-wise
cross-entropy.
"""

from __future__ import annotations

import logging

import torch
import torch.nn as nn
import torch.nn.functional as F

from .checkpoint import save_checkpoint
from .errors import ConfigError, ShapeError
from .numerics import ensure_finite
from .synthdata import N_KEYPOINTS, N_PARTIAL, batches, collate

log = logging.getLogger(__name__)

IN_CHANNELS = 1 + N_KEYPOINTS + 3 + 3
LAMBDA_ADV = 0.1
PPP_KEYS = ("body_shape", "pose", "head", "garment", "partial")


def _conv_block(cin, cout, k, stride=1):
    return nn.Sequential(
        nn.Conv2d(cin, cout, k, stride, k // 2 if stride == 1 else 1, padding_mode="reflect" if k > 3 else "zeros"),
        nn.InstanceNorm2d(cout, affine=True),
        nn.ReLU(inplace=True),
    )


class ResBlock(nn.Module):
    def __init__(self, c):
        super().__init__()
        self.body = nn.Sequential(
            nn.Conv2d(c, c, 3, 1, 1), nn.InstanceNorm2d(c, affine=True), nn.ReLU(inplace=True),
            nn.Conv2d(c, c, 3, 1, 1), nn.InstanceNorm2d(c, affine=True),
        )

    def forward(self, x):
        return x + self.body(x)


class AffineWarp(nn.Module):
    """Predicts a 2x3 affine matrix (initialised to identity) and resamples
    garment features with it."""

    def __init__(self, cin):
        super().__init__()
        self.features = nn.Sequential(nn.Conv2d(cin, 32, 3, 2, 1), nn.ReLU(inplace=True), nn.AdaptiveAvgPool2d(1))
        self.fc = nn.Linear(32, 6)
        nn.init.zeros_(self.fc.weight)
        with torch.no_grad():
            self.fc.bias.copy_(torch.tensor([1.0, 0, 0, 0, 1.0, 0]))

    def forward(self, context, feats):
        theta = self.fc(self.features(context).flatten(1)).view(-1, 2, 3)
        grid = F.affine_grid(theta, list(feats.shape), align_corners=False)
        return F.grid_sample(feats, grid, padding_mode="border", align_corners=False), theta


class PPPGenerator(nn.Module):
    def __init__(self, in_channels=IN_CHANNELS, n_classes=N_PARTIAL, width=32, n_res=6):
        super().__init__()
        w = width
        self.in_channels = in_channels
        self.encoder = nn.Sequential(_conv_block(in_channels, w, 7), _conv_block(w, 2 * w, 3, 2), _conv_block(2 * w, 4 * w, 3, 2))
        self.garment_encoder = nn.Sequential(_conv_block(3, w, 7), _conv_block(w, 2 * w, 3, 2), _conv_block(2 * w, 2 * w, 3, 2))
        self.affine = AffineWarp(6 * w)
        self.fuse = nn.Sequential(nn.Conv2d(8 * w, 4 * w, 1), nn.ReLU(inplace=True))
        self.res = nn.Sequential(*[ResBlock(4 * w) for _ in range(n_res)])
        self.decoder = nn.Sequential(
            nn.Upsample(scale_factor=2, mode="bilinear", align_corners=False), _conv_block(4 * w, 2 * w, 3),
            nn.Upsample(scale_factor=2, mode="bilinear", align_corners=False), _conv_block(2 * w, w, 3),
            nn.Conv2d(w, n_classes, 7, 1, 3, padding_mode="reflect"),
        )

    def forward(self, cond):
        if cond.shape[1] != self.in_channels:
            raise ShapeError(f"PPP input has {cond.shape[1]} channels, expected {self.in_channels}")
        h, w = cond.shape[-2:]
        if h % 4 or w % 4:
            raise ShapeError(f"PPP input size {h}x{w} must be divisible by 4")
        f = self.encoder(cond)
        garment = cond[:, -3:]
        fg = self.garment_encoder(garment)
        warped, _ = self.affine(torch.cat([f, fg], 1), fg)
        y = self.fuse(torch.cat([f, warped, fg], 1))
        return self.decoder(self.res(y))


class PatchDiscriminator(nn.Module):
    """Four conv layers; ``forward`` returns every layer's activation, the
    last one being the patch score map."""

    def __init__(self, cond_channels=IN_CHANNELS, n_classes=N_PARTIAL, width=32):
        super().__init__()
        w = width
        self.layers = nn.ModuleList([
            nn.Sequential(nn.Conv2d(cond_channels + n_classes, w, 4, 2, 1), nn.LeakyReLU(0.2)),
            nn.Sequential(nn.Conv2d(w, 2 * w, 4, 2, 1), nn.InstanceNorm2d(2 * w, affine=True), nn.LeakyReLU(0.2)),
            nn.Sequential(nn.Conv2d(2 * w, 4 * w, 3, 1, 1), nn.InstanceNorm2d(4 * w, affine=True), nn.LeakyReLU(0.2)),
            nn.Conv2d(4 * w, 1, 3, 1, 1),
        ])

    def forward(self, cond, parsing):
        x = torch.cat([cond, parsing], 1)
        feats = []
        for layer in self.layers:
            x = layer(x)
            feats.append(x)
        return feats


def ppp_losses(pred_logits, real_labels, cond, disc, lambda_adv=LAMBDA_ADV):
    """Returns ``(g_total, d_total, parts)``.

    The generator terms use the discriminator with the current weights; the
    discriminator term sees a detached prediction.
    """
    n_classes = pred_logits.shape[1]
    fake = pred_logits.softmax(1)
    real = F.one_hot(real_labels, n_classes).permute(0, 3, 1, 2).to(fake.dtype)
    real_feats = disc(cond, real)
    fake_feats = disc(cond, fake)
    l_adv = ((fake_feats[-1] - 1) ** 2).mean()
    l_fm = sum((r.detach() - f).abs().mean() for r, f in zip(real_feats, fake_feats))
    l_pixel = F.cross_entropy(pred_logits, real_labels)
    g_total = l_pixel + l_fm + lambda_adv * l_adv

    d_fake = disc(cond, fake.detach())[-1]
    d_total = ((real_feats[-1] - 1) ** 2).mean() + (d_fake**2).mean()
    return g_total, d_total, {"pixel": l_pixel, "fm": l_fm, "adv_g": l_adv, "d": d_total}


def ppp_batch(samples):
    b = collate(samples, PPP_KEYS)
    cond = torch.cat([b["body_shape"], b["pose"], b["head"], b["garment"]], 1)
    return cond, b["partial"]


def pixel_accuracy(logits, labels):
    return float((logits.argmax(1) == labels).float().mean())


@torch.no_grad()
def evaluate(gen, samples, batch_size=8):
    gen.eval()
    acc, ce, n = 0.0, 0.0, 0
    for chunk in batches(samples, batch_size):
        cond, labels = ppp_batch(chunk)
        logits = gen(cond)
        acc += pixel_accuracy(logits, labels) * len(chunk)
        ce += float(F.cross_entropy(logits, labels)) * len(chunk)
        n += len(chunk)
    return {"pixel_acc": acc / max(n, 1), "pixel_ce": ce / max(n, 1)}


def train_ppp(gen, disc, train_samples, epochs, rng, *, lr=2e-3, betas=(0.5, 0.999), batch_size=8,
              val_samples=None, checkpoint_dir=None, seed=None, lambda_adv=LAMBDA_ADV, on_step=None):
    """Alternating generator / discriminator steps."""
    if not train_samples:
        raise ConfigError("PPP training needs a non-empty dataset")
    opt_g = torch.optim.Adam(gen.parameters(), lr=lr, betas=betas)
    opt_d = torch.optim.Adam(disc.parameters(), lr=lr, betas=betas)
    history = {"g_loss": [], "d_loss": [], "pixel_ce": [], "val": []}
    for epoch in range(1, epochs + 1):
        gen.train()
        disc.train()
        for chunk in batches(train_samples, batch_size, rng):
            cond, labels = ppp_batch(chunk)
            logits = gen(cond)
            g_total, d_total, parts = ppp_losses(logits, labels, cond, disc, lambda_adv)
            ensure_finite(g_total, "PPP generator loss")
            opt_g.zero_grad(set_to_none=True)
            opt_d.zero_grad(set_to_none=True)
            g_total.backward(inputs=list(gen.parameters()))
            opt_g.step()
            opt_d.zero_grad(set_to_none=True)
            ensure_finite(d_total, "PPP discriminator loss")
            d_total.backward(inputs=list(disc.parameters()))
            opt_d.step()
            history["g_loss"].append(g_total.item())
            history["d_loss"].append(d_total.item())
            history["pixel_ce"].append(parts["pixel"].item())
            if on_step:
                on_step(parts)
        if val_samples:
            history["val"].append(evaluate(gen, val_samples))
            log.info("ppp epoch %d: %s", epoch, history["val"][-1])
        if checkpoint_dir is not None:
            save_checkpoint(checkpoint_dir, f"epoch_{epoch}", {"generator": gen.state_dict(), "discriminator": disc.state_dict()}, {
                "kind": "ppp", "epoch": epoch, "seed": seed,
                "val": history["val"][-1] if history["val"] else None,
            })
    return history
