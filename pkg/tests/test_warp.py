import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from tryon_nas.errors import ArgumentError, ShapeError
from tryon_nas.numerics import grid_warp
from tryon_nas.warp import compose_flows, load_flow, save_flow, tv_loss, upsample_flow, zero_flow


def smooth_flow(h, w, amp, seed, dtype=torch.float64):
    g = torch.Generator().manual_seed(seed)
    coarse = torch.randn(1, 2, 3, 3, generator=g, dtype=dtype) * amp
    return torch.nn.functional.interpolate(coarse, size=(h, w), mode="bilinear", align_corners=True)


def smooth_image(h, w, seed, dtype=torch.float64):
    ys, xs = torch.meshgrid(torch.arange(h, dtype=dtype), torch.arange(w, dtype=dtype), indexing="ij")
    g = torch.Generator().manual_seed(seed)
    a, b, c = torch.rand(3, generator=g, dtype=dtype)
    return (torch.sin(0.3 * xs * (1 + a) + b) * torch.cos(0.25 * ys + c))[None, None]


def test_compose_with_zero_is_identity():
    f = smooth_flow(10, 12, 2.0, 0)
    z = zero_flow(1, 10, 12, like=f)
    assert torch.allclose(compose_flows(z, f), f)
    assert torch.allclose(compose_flows(f, z), f)


def test_compose_constant_flows_add():
    a = torch.zeros(1, 2, 8, 8)
    a[:, 0] = 1.0
    b = torch.zeros(1, 2, 8, 8)
    b[:, 1] = -2.0
    c = compose_flows(a, b)
    # constant flows compose by addition (border clamp does not matter for constants)
    assert torch.allclose(c, a + b)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.2, 1.5))
def test_compose_matches_sequential_warp(seed, amp):
    h, w = 24, 28
    x = smooth_image(h, w, seed)
    f1, f2 = smooth_flow(h, w, amp, seed + 1), smooth_flow(h, w, amp, seed + 2)
    seq = grid_warp(grid_warp(x, f1), f2)
    direct = grid_warp(x, compose_flows(f1, f2))
    # compare away from the border, where clamping makes the two differ
    m = 3
    err = (seq - direct)[..., m:-m, m:-m].abs().mean()
    assert err < 2e-2


def test_compose_resolution_mismatch():
    with pytest.raises(ShapeError):
        compose_flows(torch.zeros(1, 2, 4, 4), torch.zeros(1, 2, 8, 8))


def test_upsample_flow_scales_values():
    f = torch.full((1, 2, 3, 4), 1.5)
    up = upsample_flow(f)
    assert up.shape == (1, 2, 6, 8)
    assert torch.allclose(up, torch.full_like(up, 3.0))
    with pytest.raises(ArgumentError):
        upsample_flow(f, 3)


def test_tv_constant_is_zero():
    f = torch.full((2, 2, 5, 7), 3.2)
    assert tv_loss(f).item() == 0.0


def test_tv_step_edge():
    # a unit step in dx between column 2 and 3 over 4 rows: TV = 4
    f = torch.zeros(1, 2, 4, 6)
    f[0, 0, :, 3:] = 1.0
    assert tv_loss(f).item() == 4.0


def test_tv_ramp_and_batch_mean():
    # dy = row index: every vertical difference is 1 -> (h-1)*w
    h, w = 5, 3
    f = torch.zeros(2, 2, h, w)
    f[0, 1] = torch.arange(h, dtype=torch.float32)[:, None]
    assert tv_loss(f[:1]).item() == (h - 1) * w
    assert tv_loss(f).item() == (h - 1) * w / 2


def test_tv_gradient():
    f = torch.randn(1, 2, 4, 5, dtype=torch.float64, requires_grad=True)
    from tryon_nas.numerics import gradient_check

    assert gradient_check(lambda: tv_loss(f), [f]) < 1e-4


def test_flow_file_roundtrip(tmp_path):
    f = torch.randn(1, 2, 5, 7)
    save_flow(tmp_path / "a.flo", f)
    back = load_flow(tmp_path / "a.flo")
    np.testing.assert_array_equal(back, f[0].numpy())
    (tmp_path / "bad.flo").write_bytes(b"XXXX" + b"\0" * 8)
    with pytest.raises(ArgumentError):
        load_flow(tmp_path / "bad.flo")
