import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from tryon_nas.errors import ShapeError
from tryon_nas.metrics import SsimConfig, append_metric_rows, mask_iou, read_metric_rows, ssim


def brute_ssim(a, b, size=11, sigma=1.5, k1=0.01, k2=0.03):
    """Direct double loop over every valid window position."""
    ax = np.arange(size) - (size - 1) / 2
    g = np.exp(-(ax**2) / (2 * sigma**2))
    win = np.outer(g, g)
    win /= win.sum()
    c1, c2 = (k1) ** 2, (k2) ** 2
    h, w = a.shape
    vals = []
    for i in range(h - size + 1):
        for j in range(w - size + 1):
            pa, pb = a[i:i + size, j:j + size], b[i:i + size, j:j + size]
            ma, mb = (win * pa).sum(), (win * pb).sum()
            va = (win * pa * pa).sum() - ma * ma
            vb = (win * pb * pb).sum() - mb * mb
            cov = (win * pa * pb).sum() - ma * mb
            vals.append(((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2)))
    return float(np.mean(vals))


def test_window_sums_to_one():
    k = SsimConfig().kernel1d()
    assert math.isclose(float(k.sum()), 1.0, rel_tol=1e-12)


def test_ssim_matches_brute_force():
    g = np.random.default_rng(3)
    a = g.random((16, 16))
    b = np.clip(a + 0.2 * g.standard_normal((16, 16)), 0, 1)
    assert abs(ssim(torch.tensor(a), torch.tensor(b)) - brute_ssim(a, b)) < 1e-6


def test_ssim_channel_average():
    g = np.random.default_rng(4)
    a, b = g.random((3, 16, 16)), g.random((3, 16, 16))
    ref = np.mean([brute_ssim(a[c], b[c]) for c in range(3)])
    assert abs(ssim(torch.tensor(a), torch.tensor(b)) - ref) < 1e-6


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_ssim_self_and_symmetry(seed):
    g = torch.Generator().manual_seed(seed)
    a = torch.rand(1, 3, 20, 17, generator=g)
    b = torch.rand(1, 3, 20, 17, generator=g)
    assert abs(ssim(a, a) - 1.0) < 1e-9
    assert abs(ssim(a, b) - ssim(b, a)) < 1e-12
    assert ssim(a, b) < 1.0


def test_ssim_errors():
    with pytest.raises(ShapeError):
        ssim(torch.rand(1, 3, 16, 16), torch.rand(1, 3, 16, 15))
    with pytest.raises(ShapeError):
        ssim(torch.rand(1, 1, 8, 8), torch.rand(1, 1, 8, 8))


def test_iou_cases():
    m = torch.zeros(10, 10)
    m[2:6, 2:6] = 1
    assert mask_iou(m, m) == 1.0
    assert mask_iou(m, 1 - m) == 0.0
    assert mask_iou(torch.zeros(4, 4), torch.zeros(4, 4)) == 1.0
    # two 4x4 squares overlapping by half: 8 / (16 + 16 - 8) = 1/3
    n = torch.zeros(10, 10)
    n[2:6, 4:8] = 1
    assert mask_iou(m, n) == pytest.approx(1 / 3)


def test_metric_rows_roundtrip(tmp_path):
    p = tmp_path / "m.csv"
    append_metric_rows(p, [("r1", "val", "ssim", 0.5)])
    append_metric_rows(p, [("r1", "test", "ssim", 0.25)])
    rows = read_metric_rows(p)
    assert [(r["split"], float(r["value"])) for r in rows] == [("val", 0.5), ("test", 0.25)]
