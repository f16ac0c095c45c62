"""Procedural try-on samples with exact ground-truth deformations.

Every sample is built in a canonical frame (a stick-figure person wearing the
flat garment ``C``) and then deformed by a known backward flow, so the
warped garment ``C_t`` is ``grid_warp(C, flow)`` by construction.  The
categories differ in how rich the deformation is: affine only for vests, an
increasingly dense elastic control grid for the others, and an occluding
forearm for long sleeves.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image, ImageDraw
from scipy.ndimage import gaussian_filter

from .errors import ConfigError
from .numerics import grid_warp
from .search_space import CATEGORIES, Category

log = logging.getLogger(__name__)

GENERATOR_VERSION = "1.0"
REFERENCE_RES = (96, 128)

PARSING_LABELS = ("background", "head", "upper_garment", "lower_garment", "arms", "legs", "neck", "shoes")
BG, HEAD, UPPER, LOWER, ARMS, LEGS, NECK, SHOES = range(8)
# partial parsing: the regions that change when the garment is swapped
PARTIAL_LABELS = ("background", "garment", "arms_or_legs", "neck_or_shoes", "preserved")
N_PARSING = len(PARSING_LABELS)
N_PARTIAL = len(PARTIAL_LABELS)
N_KEYPOINTS = 18

# OpenPose-18 order; person's right side is on the image left
CANONICAL_KEYPOINTS = np.array(
    [
        (0.50, 0.12), (0.50, 0.21), (0.40, 0.23), (0.35, 0.38), (0.31, 0.53),
        (0.60, 0.23), (0.65, 0.38), (0.69, 0.53), (0.45, 0.52), (0.45, 0.70),
        (0.45, 0.87), (0.55, 0.52), (0.55, 0.70), (0.55, 0.87), (0.485, 0.10),
        (0.515, 0.10), (0.46, 0.11), (0.54, 0.11),
    ],
    dtype=np.float64,
)


@dataclass(frozen=True)
class DeformationFamily:
    control_grid: int  # 0 = affine only
    amplitude: float  # px at the reference resolution
    occluder: bool = False
    max_rotation_deg: float = 10.0
    scale_range: tuple = (0.9, 1.1)
    max_translation: float = 8.0


FAMILIES = {
    Category.SLING_VEST: DeformationFamily(0, 0.0),
    Category.SHORT_SLEEVE: DeformationFamily(3, 4.0),
    Category.PANTS: DeformationFamily(4, 6.0),
    Category.SKIRT: DeformationFamily(4, 6.0),
    Category.LONG_SLEEVE: DeformationFamily(5, 8.0, occluder=True),
}
MAX_OCCLUDED_FRACTION = 0.15


@dataclass
class Sample:
    """One try-on instance.  Images are float32 in [0, 1], channel-first."""

    sample_id: str
    category: Category
    seed: int
    garment: np.ndarray  # C (3, h, w)
    garment_mask: np.ndarray  # M_c (1, h, w)
    target_mask: np.ndarray  # visible garment region on the person (1, h, w)
    warped_garment: np.ndarray  # C_t (3, h, w)
    flow: np.ndarray  # ground-truth backward flow (2, h, w), pixels
    person: np.ndarray  # I (3, h, w)
    parsing: np.ndarray  # uint8 (h, w), PARSING_LABELS
    partial: np.ndarray  # uint8 (h, w), PARTIAL_LABELS
    keypoints: np.ndarray  # (18, 2) x, y in pixels

    @property
    def resolution(self):
        return self.garment.shape[1:]

    def pose_heatmaps(self):
        return render_heatmaps(self.keypoints, *self.resolution)

    def body_shape(self):
        h, w = self.resolution
        sil = (self.parsing != BG).astype(np.float32)
        return gaussian_filter(sil, sigma=max(h, w) / 48.0)[None].astype(np.float32)

    def head_image(self):
        return self.person * (self.parsing == HEAD)[None]

    def preserved_mask(self):
        return np.isin(self.partial, (0, 4)).astype(np.float32)[None]

    def preserved_person(self):
        return self.person * self.preserved_mask()


def render_heatmaps(keypoints, h, w):
    sigma = max(1.0, 0.025 * max(h, w))
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float32)
    out = np.empty((len(keypoints), h, w), np.float32)
    for i, (kx, ky) in enumerate(keypoints):
        out[i] = np.exp(-((xs - kx) ** 2 + (ys - ky) ** 2) / (2 * sigma**2))
    return out


# -- canonical drawing -------------------------------------------------------


def _texture(rng, h, w):
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float32)
    c0, c1 = rng.uniform(0.05, 0.95, size=(2, 3))
    kind = rng.integers(0, 3)
    period = rng.uniform(4.0, 14.0) * max(h, w) / 128
    if kind == 0:
        ang = rng.uniform(0, math.pi)
        t = (np.cos(ang) * xs + np.sin(ang) * ys) / period
        pattern = 0.5 + 0.5 * np.sin(2 * math.pi * t)
    elif kind == 1:
        pattern = ((np.floor(xs / period) + np.floor(ys / period)) % 2).astype(np.float32)
    else:
        noise = gaussian_filter(rng.standard_normal((h, w)), sigma=period / 3)
        pattern = (noise - noise.min()) / (np.ptp(noise) + 1e-8)
    fine = gaussian_filter(rng.standard_normal((h, w)), sigma=0.8) * 0.05
    p = np.clip(pattern + fine, 0, 1)[None]
    img = c0[:, None, None] * (1 - p) + c1[:, None, None] * p
    return img.astype(np.float32)


class _Canvas:
    def __init__(self, h, w):
        self.h, self.w = h, w
        self.scale = max(h, w) / 128.0

    def px(self, pt):
        return (float(pt[0]) * (self.w - 1), float(pt[1]) * (self.h - 1))

    def new(self):
        return Image.new("L", (self.w, self.h), 0)

    def limb(self, draw, pts, width, value=1):
        xy = [self.px(p) for p in pts]
        wd = max(1, int(round(width * self.scale)))
        draw.line(xy, fill=value, width=wd, joint="curve")
        r = wd / 2
        for x, y in xy:
            draw.ellipse((x - r, y - r, x + r, y + r), fill=value)

    def poly(self, draw, pts, value=1):
        draw.polygon([self.px(p) for p in pts], fill=value)


def _garment_mask(category, kp, cv, rng):
    img = cv.new()
    d = ImageDraw.Draw(img)
    rs, ls = kp[2], kp[5]
    rh, lh = kp[8], kp[11]
    pad = rng.uniform(0.01, 0.025)
    if category in (Category.SHORT_SLEEVE, Category.LONG_SLEEVE):
        cv.poly(d, [(rs[0] - pad, rs[1] - 0.01), (ls[0] + pad, ls[1] - 0.01),
                    (lh[0] + pad + 0.01, lh[1] + 0.03), (rh[0] - pad - 0.01, rh[1] + 0.03)])
        if category is Category.SHORT_SLEEVE:
            frac = rng.uniform(0.45, 0.7)
            for s, e in ((2, 3), (5, 6)):
                end = kp[s] + frac * (kp[e] - kp[s])
                cv.limb(d, [kp[s], end], 13)
        else:
            for s, e, wr in ((2, 3, 4), (5, 6, 7)):
                cv.limb(d, [kp[s], kp[e], kp[wr] - (kp[wr] - kp[e]) * 0.1], 11)
    elif category is Category.SLING_VEST:
        top = rs[1] + rng.uniform(0.05, 0.08)
        cv.poly(d, [(rs[0] + 0.02, top), (ls[0] - 0.02, top),
                    (lh[0] + pad, lh[1] + 0.03), (rh[0] - pad, rh[1] + 0.03)])
        for s in (rs, ls):
            x = s[0] + (0.035 if s is rs else -0.035)
            cv.limb(d, [(x, s[1] + 0.005), (x, top + 0.01)], 3)
    elif category is Category.PANTS:
        cv.poly(d, [(rh[0] - 0.04, rh[1] - 0.02), (lh[0] + 0.04, lh[1] - 0.02),
                    (lh[0] + 0.04, lh[1] + 0.06), (rh[0] - 0.04, rh[1] + 0.06)])
        for hip, knee, ankle in ((8, 9, 10), (11, 12, 13)):
            cv.limb(d, [kp[hip], kp[knee], kp[ankle] - (0, 0.02)], 12)
    elif category is Category.SKIRT:
        hem = rng.uniform(0.66, 0.76)
        flare = rng.uniform(0.05, 0.1)
        cv.poly(d, [(rh[0] - 0.04, rh[1] - 0.02), (lh[0] + 0.04, lh[1] - 0.02),
                    (lh[0] + 0.04 + flare, hem), (rh[0] - 0.04 - flare, hem)])
    return np.asarray(img) > 0


def _body_labels(kp, cv, upper_tryon, rng):
    """Canonical label map of the person without the tried garment."""
    img = cv.new()
    d = ImageDraw.Draw(img)
    for hip, knee, ankle in ((8, 9, 10), (11, 12, 13)):
        cv.limb(d, [kp[hip], kp[knee], kp[ankle]], 9, LEGS)
    for ankle in (10, 13):
        x, y = kp[ankle]
        cv.poly(d, [(x - 0.03, y - 0.01), (x + 0.03, y - 0.01), (x + 0.035, y + 0.05), (x - 0.035, y + 0.05)], SHOES)
    for s, e, wr in ((2, 3, 4), (5, 6, 7)):
        cv.limb(d, [kp[s], kp[e], kp[wr]], 8, ARMS)
    rs, ls, rh, lh = kp[2], kp[5], kp[8], kp[11]
    cv.poly(d, [(rs[0], rs[1] - 0.01), (ls[0], ls[1] - 0.01), (lh[0], lh[1]), (rh[0], rh[1])], NECK)
    # the garment that stays on the person
    if upper_tryon:
        cv.poly(d, [(rh[0] - 0.035, rh[1] - 0.02), (lh[0] + 0.035, lh[1] - 0.02),
                    (lh[0] + 0.035, lh[1] + 0.06), (rh[0] - 0.035, rh[1] + 0.06)], LOWER)
        for hip, knee, ankle in ((8, 9, 10), (11, 12, 13)):
            cv.limb(d, [kp[hip], kp[knee], kp[ankle] - (0, 0.03)], 11, LOWER)
    else:
        cv.poly(d, [(rs[0] - 0.01, rs[1] - 0.01), (ls[0] + 0.01, ls[1] - 0.01),
                    (lh[0] + 0.015, lh[1] + 0.01), (rh[0] - 0.015, rh[1] + 0.01)], UPPER)
        for s, e in ((2, 3), (5, 6)):
            cv.limb(d, [kp[s], kp[s] + 0.5 * (kp[e] - kp[s])], 12, UPPER)
    x, y = kp[1]
    cv.poly(d, [(x - 0.025, y - 0.06), (x + 0.025, y - 0.06), (x + 0.025, y + 0.02), (x - 0.025, y + 0.02)], NECK)
    hx, hy = cv.px(kp[0])
    rx, ry = 0.07 * (cv.w - 1), 0.09 * (cv.h - 1)
    d.ellipse((hx - rx, hy - ry * 0.9, hx + rx, hy + ry * 1.1), fill=HEAD)
    return np.asarray(img, dtype=np.uint8)


def _colorize(labels, rng):
    palette = np.zeros((N_PARSING, 3), np.float32)
    palette[BG] = rng.uniform(0.85, 1.0)
    skin = rng.uniform([0.55, 0.4, 0.3], [0.95, 0.8, 0.7])
    palette[ARMS] = palette[LEGS] = palette[NECK] = palette[HEAD] = skin
    palette[UPPER] = rng.uniform(0.1, 0.9, 3)
    palette[LOWER] = rng.uniform(0.1, 0.9, 3)
    palette[SHOES] = rng.uniform(0.0, 0.25, 3)
    img = palette[labels].transpose(2, 0, 1).copy()
    # hair on the top of the head
    hair = (labels == HEAD) & (np.mgrid[0 : labels.shape[0], 0 : labels.shape[1]][0] < _head_top(labels))
    img[:, hair] = rng.uniform(0.0, 0.3, 3)[:, None]
    return img, skin


def _head_top(labels):
    rows = np.nonzero((labels == HEAD).any(axis=1))[0]
    if len(rows) == 0:
        return 0
    return rows[0] + 0.35 * (rows[-1] - rows[0])


# -- deformation -------------------------------------------------------------


def _affine_flow(rng, fam, h, w, s):
    th = math.radians(rng.uniform(-fam.max_rotation_deg, fam.max_rotation_deg))
    sc = rng.uniform(*fam.scale_range)
    t = rng.uniform(-fam.max_translation, fam.max_translation, 2) * s
    a = sc * np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    cx, cy = (w - 1) / 2, (h - 1) / 2
    px, py = xs - cx, ys - cy
    sx = a[0, 0] * px + a[0, 1] * py + cx + t[0]
    sy = a[1, 0] * px + a[1, 1] * py + cy + t[1]
    return np.stack([sx - xs, sy - ys])


def _elastic_flow(rng, fam, h, w, s):
    k = fam.control_grid
    ctrl = rng.uniform(-fam.amplitude * s, fam.amplitude * s, size=(1, 2, k, k))
    up = F.interpolate(torch.from_numpy(ctrl), size=(h, w), mode="bilinear", align_corners=True)
    return up[0].numpy()


def jacobian_min_det(flow):
    """Smallest det(I + grad flow) over the canvas (forward differences)."""
    dx_dx = np.diff(flow[0], axis=1)[:-1, :]
    dy_dx = np.diff(flow[1], axis=1)[:-1, :]
    dx_dy = np.diff(flow[0], axis=0)[:, :-1]
    dy_dy = np.diff(flow[1], axis=0)[:, :-1]
    det = (1 + dx_dx) * (1 + dy_dy) - dx_dy * dy_dx
    return float(det.min())


def sample_flow(category, rng, h, w):
    fam = FAMILIES[category]
    s = min(h / REFERENCE_RES[0], w / REFERENCE_RES[1])
    for _ in range(100):
        flow = _affine_flow(rng, fam, h, w, s)
        if fam.control_grid:
            flow = flow + _elastic_flow(rng, fam, h, w, s)
        if jacobian_min_det(flow) > 0.05:
            return flow.astype(np.float32)
    raise RuntimeError("could not draw a bijective deformation")  # pragma: no cover


def forward_map_points(points, flow):
    """Target pixel whose backward displacement lands closest to each point."""
    h, w = flow.shape[1:]
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float32)
    sx, sy = (xs + flow[0]).ravel(), (ys + flow[1]).ravel()
    out = np.empty((len(points), 2), np.float32)
    for i, (px, py) in enumerate(points):
        j = int(np.argmin((sx - px) ** 2 + (sy - py) ** 2))
        out[i] = (xs.ravel()[j], ys.ravel()[j])
    return out


def _warp_np(img, flow):
    return grid_warp(torch.from_numpy(img)[None], torch.from_numpy(flow)[None])[0].numpy()


def _warp_labels(labels, flow):
    h, w = labels.shape
    ys, xs = np.mgrid[0:h, 0:w]
    sx = np.clip(np.rint(xs + flow[0]), 0, w - 1).astype(int)
    sy = np.clip(np.rint(ys + flow[1]), 0, h - 1).astype(int)
    return labels[sy, sx]


def _occluder(rng, target_mask, kp_t, cv):
    """Forearm across the garment covering at most 15 % of the visible mask."""
    area = target_mask.sum()
    for _ in range(50):
        cy = rng.uniform(kp_t[1][1], kp_t[8][1])
        x0 = rng.uniform(kp_t[2][0], kp_t[1][0])
        length = rng.uniform(0.1, 0.25) * cv.w
        thick = rng.uniform(0.04, 0.08) * cv.h
        img = cv.new()
        ImageDraw.Draw(img).rectangle((x0, cy - thick / 2, x0 + length, cy + thick / 2), fill=1)
        occ = np.asarray(img) > 0
        frac = (occ & target_mask).sum() / max(area, 1)
        if 0.02 <= frac <= MAX_OCCLUDED_FRACTION:
            return occ
    return np.zeros_like(target_mask)


def make_sample(category, resolution, seed, sample_id=None):
    category = Category(category)
    h, w = resolution
    rng = np.random.default_rng(seed)
    cv = _Canvas(h, w)
    kp = CANONICAL_KEYPOINTS + rng.uniform(-0.01, 0.01, CANONICAL_KEYPOINTS.shape)
    upper = category.is_upper

    gmask = _garment_mask(category, kp, cv, rng)
    texture = _texture(rng, h, w)
    garment = np.where(gmask[None], texture, 1.0)
    # quantize so C is exactly representable as 8-bit
    garment = (np.rint(garment * 255) / 255).astype(np.float32)
    garment_mask = gmask[None].astype(np.float32)

    flow = sample_flow(category, rng, h, w)
    warped_garment = _warp_np(garment, flow)
    target_mask = _warp_np(garment_mask, flow)[0] > 0.5

    body = _body_labels(kp, cv, upper, rng)
    body_rgb, skin = _colorize(body, rng)
    person = _warp_np(body_rgb, flow)
    parsing = _warp_labels(body, flow)
    kp_t = forward_map_points(np.array([cv.px(p) for p in kp]), flow)

    if FAMILIES[category].occluder:
        occ = _occluder(rng, target_mask, kp_t, cv)
    else:
        occ = np.zeros_like(target_mask)
    visible = target_mask & ~occ
    person = np.where(visible[None], warped_garment, person)
    parsing = parsing.copy()
    parsing[visible] = UPPER if upper else LOWER
    person = np.where(occ[None], skin[:, None, None].astype(np.float32), person)
    parsing[occ] = ARMS

    partial = np.full((h, w), 4, np.uint8)
    partial[parsing == BG] = 0
    partial[visible] = 1
    partial[parsing == (ARMS if upper else LEGS)] = 2
    partial[parsing == (NECK if upper else SHOES)] = 3

    return Sample(
        sample_id=sample_id or f"{category.value}-{seed}",
        category=category,
        seed=int(seed),
        garment=garment,
        garment_mask=garment_mask,
        target_mask=visible[None].astype(np.float32),
        warped_garment=warped_garment.astype(np.float32),
        flow=flow,
        person=np.clip(person, 0, 1).astype(np.float32),
        parsing=parsing.astype(np.uint8),
        partial=partial,
        keypoints=kp_t,
    )


def check_resolution(resolution, multiple=16):
    h, w = resolution
    if h < 32 or w < 32 or h % multiple or w % multiple:
        raise ConfigError(
            f"resolution {h}x{w} must be at least 32 and divisible by {multiple} in both dimensions"
        )


def sample_seed(seed, category, index):
    ss = np.random.SeedSequence([int(seed), CATEGORIES.index(Category(category)), int(index)])
    return int(ss.generate_state(1)[0])


def generate(category, count, resolution, seed, multiple=16):
    """``count`` samples of one category; per-sample seeds derive from ``seed``."""
    check_resolution(resolution, multiple)
    category = Category(category)
    return [
        make_sample(category, resolution, sample_seed(seed, category, i), f"{category.value}-{i:05d}")
        for i in range(count)
    ]


def generate_all(count_per_category, resolution, seed, categories=CATEGORIES, multiple=16):
    out = []
    for c in categories:
        out.extend(generate(c, count_per_category, resolution, seed, multiple))
    return out


def split(dataset, fractions=(5 / 7, 1 / 7, 1 / 7), seed=0, names=("train", "val", "test")):
    """Category-stratified, disjoint split."""
    if len(fractions) != len(names) or any(f < 0 for f in fractions) or abs(sum(fractions) - 1) > 1e-6:
        raise ConfigError(f"split fractions {fractions} must be non-negative and sum to 1")
    rng = np.random.default_rng(seed)
    out = {n: [] for n in names}
    by_cat = {}
    for s in dataset:
        by_cat.setdefault(s.category, []).append(s)
    for cat in sorted(by_cat, key=lambda c: c.value):
        items = by_cat[cat]
        order = rng.permutation(len(items))
        cuts = np.rint(np.cumsum(fractions) * len(items)).astype(int)
        start = 0
        for name, end in zip(names, cuts):
            out[name].extend(items[i] for i in order[start:end])
            start = end
    return out


# -- disk layout -------------------------------------------------------------

ARRAY_FIELDS = ("garment", "garment_mask", "target_mask", "warped_garment", "flow",
                "person", "parsing", "partial", "keypoints")

CHANNEL_DOC = {
    "garment": "flat garment C, RGB float32 (3,h,w) in [0,1]",
    "garment_mask": "M_c, float32 (1,h,w) in {0,1}",
    "target_mask": "visible garment region on the person, float32 (1,h,w)",
    "warped_garment": "C_t = grid_warp(C, flow), float32 (3,h,w)",
    "flow": "backward flow (dx, dy) in pixels, float32 (2,h,w)",
    "person": "person image I, RGB float32 (3,h,w)",
    "parsing": "uint8 (h,w) labels " + ",".join(PARSING_LABELS),
    "partial": "uint8 (h,w) labels " + ",".join(PARTIAL_LABELS),
    "keypoints": "float32 (18,2) OpenPose-18 order, (x, y) pixels",
}


def save_dataset(splits, root, seed, resolution):
    root = Path(root)
    counts = {}
    for split_name, samples in splits.items():
        for s in samples:
            d = root / split_name / s.category.value
            d.mkdir(parents=True, exist_ok=True)
            np.savez_compressed(d / f"{s.sample_id}.npz", **{f: getattr(s, f) for f in ARRAY_FIELDS})
            record = {"id": s.sample_id, "category": s.category.value, "seed": s.seed,
                      "split": split_name, "arrays": f"{s.sample_id}.npz"}
            (d / f"{s.sample_id}.json").write_text(json.dumps(record, indent=1))
            counts.setdefault(split_name, {}).setdefault(s.category.value, 0)
            counts[split_name][s.category.value] += 1
    manifest = {
        "generator_version": GENERATOR_VERSION,
        "seed": seed,
        "resolution": list(resolution),
        "counts": counts,
        "ids": {k: sorted(s.sample_id for s in v) for k, v in splits.items()},
        "channels": CHANNEL_DOC,
    }
    (root / "manifest.json").write_text(json.dumps(manifest, indent=1))
    return manifest


def read_manifest(root):
    path = Path(root) / "manifest.json"
    if not path.exists():
        raise ConfigError(f"no dataset manifest at {path}")
    return json.loads(path.read_text())


def load_sample(npz_path, record):
    with np.load(npz_path) as z:
        arrays = {f: z[f] for f in ARRAY_FIELDS}
    return Sample(sample_id=record["id"], category=Category(record["category"]), seed=record["seed"], **arrays)


def load_split(root, split_name, categories=None):
    root = Path(root)
    read_manifest(root)
    cats = [Category(c).value for c in categories] if categories else [c.value for c in CATEGORIES]
    out = []
    for c in cats:
        d = root / split_name / c
        if not d.is_dir():
            continue
        for rec_path in sorted(d.glob("*.json")):
            record = json.loads(rec_path.read_text())
            out.append(load_sample(d / record["arrays"], record))
    return out


# -- batching ----------------------------------------------------------------


_FIELDS = {
    "garment": lambda s: s.garment,
    "garment_mask": lambda s: s.garment_mask,
    "target_mask": lambda s: s.target_mask,
    "warped_garment": lambda s: s.warped_garment,
    "flow": lambda s: s.flow,
    "person": lambda s: s.person,
    "preserved_person": lambda s: s.preserved_person(),
    "pose": lambda s: s.pose_heatmaps(),
    "body_shape": lambda s: s.body_shape(),
    "head": lambda s: s.head_image(),
    "parsing": lambda s: s.parsing.astype(np.int64),
    "partial": lambda s: s.partial.astype(np.int64),
}
WARP_KEYS = ("garment", "garment_mask", "target_mask", "warped_garment")


def collate(samples, keys=None):
    """Stack samples into the tensors the networks consume.

    ``keys`` limits the work to the named fields; ``parsing_onehot`` is
    derived from ``parsing``.
    """
    keys = tuple(_FIELDS) + ("parsing_onehot",) if keys is None else tuple(keys)
    out = {"categories": [s.category for s in samples]}
    for k in keys:
        if k == "parsing_onehot":
            continue
        out[k] = torch.from_numpy(np.stack([_FIELDS[k](s) for s in samples]))
    if "parsing_onehot" in keys:
        parsing = out.get("parsing")
        if parsing is None:
            parsing = torch.from_numpy(np.stack([s.parsing.astype(np.int64) for s in samples]))
        out["parsing_onehot"] = F.one_hot(parsing, N_PARSING).permute(0, 3, 1, 2).float()
    return out


def batches(samples, batch_size, rng=None):
    order = np.arange(len(samples)) if rng is None else rng.permutation(len(samples))
    for i in range(0, len(order), batch_size):
        yield [samples[j] for j in order[i : i + batch_size]]
