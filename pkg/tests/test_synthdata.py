import json

import numpy as np
import pytest
import torch

from tryon_nas.errors import ConfigError
from tryon_nas.metrics import ssim
from tryon_nas.numerics import grid_warp
from tryon_nas.search_space import CATEGORIES, Category
from tryon_nas.synthdata import (
    FAMILIES,
    MAX_OCCLUDED_FRACTION,
    N_KEYPOINTS,
    N_PARSING,
    collate,
    generate,
    generate_all,
    jacobian_min_det,
    load_split,
    make_sample,
    read_manifest,
    sample_flow,
    save_dataset,
    split,
)
from tryon_nas.warp import tv_loss


def test_determinism():
    a = generate("sling_vest", 1, (96, 128), seed=7)[0]
    b = generate("sling_vest", 1, (96, 128), seed=7)[0]
    for f in ("garment", "warped_garment", "person", "parsing", "partial", "flow", "keypoints"):
        assert np.array_equal(getattr(a, f), getattr(b, f)), f
    c = generate("sling_vest", 1, (96, 128), seed=8)[0]
    assert not np.array_equal(a.garment, c.garment)


@pytest.mark.parametrize("cat", [c.value for c in CATEGORIES])
def test_construction_identity(cat):
    s = make_sample(cat, (96, 128), 3)
    out = grid_warp(torch.from_numpy(s.garment)[None], torch.from_numpy(s.flow)[None])[0]
    assert torch.equal(out, torch.from_numpy(s.warped_garment))
    assert ssim(out, torch.from_numpy(s.warped_garment)) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("cat", [c.value for c in CATEGORIES])
def test_sample_contract(cat):
    s = make_sample(cat, (64, 48), 11)
    h, w = 64, 48
    assert s.garment.shape == (3, h, w) and s.flow.shape == (2, h, w)
    for f in ("garment", "garment_mask", "target_mask", "warped_garment", "person"):
        arr = getattr(s, f)
        # bilinear resampling may overshoot 1 by float32 rounding; C_t stays an exact warp
        assert arr.dtype == np.float32 and arr.min() >= 0 and arr.max() <= 1 + 1e-6, f
    assert s.parsing.max() < N_PARSING and s.partial.max() < 5
    assert s.keypoints.shape == (N_KEYPOINTS, 2)
    assert jacobian_min_det(s.flow) > 0
    # the visible target is the thresholded warped mask minus any occluder
    warped = grid_warp(torch.from_numpy(s.garment_mask)[None], torch.from_numpy(s.flow)[None])[0] > 0.5
    visible = torch.from_numpy(s.target_mask) > 0.5
    assert not (visible & ~warped).any()
    occluded = (warped & ~visible).sum().item() / max(warped.sum().item(), 1)
    if FAMILIES[Category(cat)].occluder:
        assert occluded <= MAX_OCCLUDED_FRACTION
    else:
        assert occluded == 0
    # garment pixels on the person equal the warped garment
    m = s.target_mask[0] > 0.5
    assert np.array_equal(s.person[:, m], s.warped_garment[:, m])


def test_tv_ordering_over_200():
    means = {}
    for i, c in enumerate(CATEGORIES):
        rng = np.random.default_rng(1000 + i)
        tv = [tv_loss(torch.from_numpy(sample_flow(c, rng, 96, 128))[None]).item() for _ in range(200)]
        means[c.value] = np.mean(tv)
    assert means["sling_vest"] < means["short_sleeve"] < min(means["pants"], means["skirt"])
    assert max(means["pants"], means["skirt"]) < means["long_sleeve"]
    assert abs(means["pants"] - means["skirt"]) < 0.1 * means["pants"]
    assert means["long_sleeve"] > 1.5 * means["sling_vest"]


def test_resolution_check():
    with pytest.raises(ConfigError):
        generate("pants", 1, (100, 128), 0)
    with pytest.raises(ConfigError):
        generate("pants", 1, (80, 128), 0, multiple=32)


def test_split_properties():
    data = generate_all(14, (64, 48), 0)
    s1 = split(data, seed=3)
    s2 = split(data, seed=3)
    ids = {k: [x.sample_id for x in v] for k, v in s1.items()}
    assert ids == {k: [x.sample_id for x in v] for k, v in s2.items()}
    all_ids = sum(ids.values(), [])
    assert len(all_ids) == len(set(all_ids)) == len(data)
    for c in CATEGORIES:
        n = [sum(x.category == c for x in v) for v in s1.values()]
        for got, frac in zip(n, (5 / 7, 1 / 7, 1 / 7)):
            assert abs(got - frac * 14) <= 1
    with pytest.raises(ConfigError):
        split(data, (0.5, 0.4, 0.2))


def test_save_load_roundtrip(tmp_path):
    data = generate_all(3, (64, 48), 1, categories=[Category.PANTS, Category.LONG_SLEEVE])
    splits = split(data, (1 / 3, 1 / 3, 1 / 3), seed=0)
    save_dataset(splits, tmp_path, 1, (64, 48))
    man = read_manifest(tmp_path)
    assert man["counts"]["train"] == {"long_sleeve": 1, "pants": 1}
    assert "channels" in man and man["resolution"] == [64, 48]
    back = load_split(tmp_path, "train")
    orig = {s.sample_id: s for s in splits["train"]}
    assert {s.sample_id for s in back} == set(orig)
    for s in back:
        assert np.array_equal(s.warped_garment, orig[s.sample_id].warped_garment)
        assert np.array_equal(s.parsing, orig[s.sample_id].parsing)
    rec = json.loads(next((tmp_path / "train" / "pants").glob("*.json")).read_text())
    assert rec["category"] == "pants" and rec["split"] == "train"
    with pytest.raises(ConfigError):
        read_manifest(tmp_path / "nope")


def test_collate(tiny_samples):
    b = collate(tiny_samples[:2], ("garment", "pose", "parsing_onehot"))
    assert set(b) == {"categories", "garment", "pose", "parsing_onehot"}
    assert b["pose"].shape == (2, N_KEYPOINTS, 64, 48)
    assert torch.all(b["parsing_onehot"].sum(1) == 1)
    full = collate(tiny_samples[:1])
    assert full["preserved_person"].shape == (1, 3, 64, 48)
    assert full["body_shape"].shape == (1, 1, 64, 48)
