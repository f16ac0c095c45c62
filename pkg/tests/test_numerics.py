import numpy as np
import pytest
import torch
from scipy import ndimage

from tryon_nas.errors import ArgumentError, NumericalError, ShapeError
from tryon_nas.numerics import Conv, ConvSpec, bilinear_resize, conv2d, ensure_finite, gradient_check, grid_warp


@pytest.mark.parametrize("k,dw,stride", [(1, False, 1), (3, False, 1), (3, True, 1), (1, True, 1),
                                         (3, False, 2), (4, False, 2), (5, False, 2), (5, False, 1)])
def test_conv_shapes(k, dw, stride):
    conv = Conv(ConvSpec(k, 6, 5, stride=stride, depthwise_separable=dw))
    y = conv(torch.randn(2, 6, 16, 12))
    assert y.shape == (2, 5, 16 // stride, 12 // stride)


def test_depthwise_separable_parameter_count():
    # dw: C*k*k, pw: C_out*C, bias: C_out
    spec = ConvSpec(3, 8, 4, depthwise_separable=True)
    assert sum(np.prod(s) for s in spec.weight_shapes()) == 8 * 9 + 4 * 8 + 4


@pytest.mark.parametrize("kw", [dict(kernel=2, in_channels=1, out_channels=1),
                                dict(kernel=4, in_channels=1, out_channels=1, stride=1),
                                dict(kernel=5, in_channels=1, out_channels=1, depthwise_separable=True),
                                dict(kernel=3, in_channels=1, out_channels=1, stride=3)])
def test_bad_conv_spec(kw):
    with pytest.raises(ArgumentError):
        ConvSpec(**kw)


def test_conv2d_names_bad_operand():
    spec = ConvSpec(3, 4, 2)
    with pytest.raises(ShapeError, match="weight"):
        conv2d(torch.randn(1, 4, 8, 8), spec, [torch.randn(2, 3, 3, 3), torch.zeros(2)])
    with pytest.raises(ShapeError, match="channels"):
        conv2d(torch.randn(1, 5, 8, 8), spec, [torch.randn(2, 4, 3, 3), torch.zeros(2)])


def test_zero_flow_is_identity():
    x = torch.randn(2, 3, 9, 7)
    assert torch.allclose(grid_warp(x, torch.zeros(2, 2, 9, 7)), x, atol=1e-6)


def test_integer_shift():
    x = torch.arange(30.0).view(1, 1, 5, 6)
    flow = torch.zeros(1, 2, 5, 6)
    flow[:, 0] = 1.0  # sample one pixel to the right
    out = grid_warp(x, flow)
    assert torch.allclose(out[..., :-1], x[..., 1:], atol=1e-5)
    assert torch.allclose(out[..., -1], x[..., -1], atol=1e-5)  # border clamp


def test_grid_warp_matches_scipy():
    # independent oracle: scipy's order-1 map_coordinates with edge clamping
    g = np.random.default_rng(1)
    img = g.random((7, 9))
    flow = g.uniform(-3, 3, (2, 7, 9))
    ys, xs = np.mgrid[0:7, 0:9].astype(float)
    py = np.clip(ys + flow[1], 0, 6)
    px = np.clip(xs + flow[0], 0, 8)
    ref = ndimage.map_coordinates(img, [py, px], order=1, mode="nearest")
    out = grid_warp(torch.tensor(img)[None, None], torch.tensor(flow)[None])[0, 0].numpy()
    np.testing.assert_allclose(out, ref, atol=1e-10)


def test_grid_warp_flow_batch_broadcast():
    x = torch.randn(3, 2, 6, 6)
    f = torch.randn(1, 2, 6, 6)
    out = grid_warp(x, f)
    assert torch.allclose(out[1], grid_warp(x[1:2], f)[0])
    with pytest.raises(ShapeError):
        grid_warp(x, torch.randn(2, 2, 6, 6))
    with pytest.raises(ShapeError):
        grid_warp(x, torch.randn(1, 2, 5, 6))


def test_grid_warp_gradient():
    x = torch.randn(1, 2, 6, 5, dtype=torch.float64, requires_grad=True)
    # keep sample points away from integer lattice lines where bilinear is not smooth
    f = (torch.rand(1, 2, 6, 5, dtype=torch.float64) * 0.6 + 0.2).requires_grad_()
    assert gradient_check(lambda: grid_warp(x, f), [x, f]) < 1e-3


def test_bilinear_resize():
    x = torch.randn(1, 2, 4, 6)
    assert bilinear_resize(x, 4, 6) is x
    y = bilinear_resize(x, 8, 12)
    assert y.shape == (1, 2, 8, 12)
    assert torch.allclose(bilinear_resize(torch.ones(1, 1, 3, 3), 7, 5), torch.ones(1, 1, 7, 5))
    with pytest.raises(ArgumentError):
        bilinear_resize(x, 0, 3)


def test_ensure_finite():
    ensure_finite(torch.ones(3))
    with pytest.raises(NumericalError, match="loss"):
        ensure_finite(torch.tensor([1.0, float("nan")]), "loss")


def test_gradient_check_detects_wrong_gradient():
    x = torch.randn(5, dtype=torch.float64, requires_grad=True)

    class Bad(torch.autograd.Function):
        @staticmethod
        def forward(ctx, t):
            return t**2

        @staticmethod
        def backward(ctx, g):
            return g  # wrong on purpose

    assert gradient_check(lambda: Bad.apply(x).sum(), [x]) > 0.1
    assert gradient_check(lambda: (x**2).sum(), [x]) < 1e-8
