import numpy as np
import pytest
import torch
import torch.nn as nn
import torch.nn.functional as F

from tryon_nas.errors import ConfigError, ShapeError
from tryon_nas.numerics import gradient_check
from tryon_nas.ppp import IN_CHANNELS, LAMBDA_ADV, PatchDiscriminator, PPPGenerator, ppp_batch, ppp_losses, train_ppp


class ConstantDisc(nn.Module):
    def forward(self, cond, parsing):
        b, _, h, w = cond.shape
        ones = torch.ones(b, 1, h // 4, w // 4) + 0 * parsing.sum()
        return [torch.zeros(b, 4, h // 2, w // 2), ones]


def test_input_channels():
    assert IN_CHANNELS == 1 + 18 + 3 + 3
    assert LAMBDA_ADV == 0.1


def test_generator_shapes(tiny_samples):
    gen = PPPGenerator(width=8, n_res=2)
    cond, labels = ppp_batch(tiny_samples[:2])
    logits = gen(cond)
    assert logits.shape == (2, 5, 64, 48)
    assert torch.allclose(logits.softmax(1).sum(1), torch.ones(2, 64, 48), atol=1e-6)
    with pytest.raises(ShapeError):
        gen(cond[:, :10])
    with pytest.raises(ShapeError):
        gen(torch.zeros(1, IN_CHANNELS, 30, 48))


def test_default_has_six_res_blocks():
    assert len(PPPGenerator().res) == 6


def test_constant_discriminator():
    cond = torch.rand(2, IN_CHANNELS, 16, 16)
    logits = torch.randn(2, 5, 16, 16)
    labels = torch.randint(0, 5, (2, 16, 16))
    g, d, parts = ppp_losses(logits, labels, cond, ConstantDisc())
    assert parts["adv_g"].item() == 0.0
    assert d.item() == 1.0
    assert parts["fm"].item() == 0.0
    assert g.item() == pytest.approx(F.cross_entropy(logits, labels).item())


def test_feature_matching_zero_for_real_output():
    disc = PatchDiscriminator(width=8)
    cond = torch.rand(1, IN_CHANNELS, 16, 16)
    labels = torch.randint(0, 5, (1, 16, 16))
    logits = F.one_hot(labels, 5).permute(0, 3, 1, 2).float() * 1000
    _, _, parts = ppp_losses(logits, labels, cond, disc)
    assert parts["fm"].item() == 0.0
    assert all(v.item() >= 0 for v in parts.values())


def test_losses_gradient():
    torch.manual_seed(1)
    disc = PatchDiscriminator(width=4).double()
    cond = torch.rand(1, IN_CHANNELS, 16, 16, dtype=torch.float64)
    logits = torch.randn(1, 5, 16, 16, dtype=torch.float64, requires_grad=True)
    labels = torch.randint(0, 5, (1, 16, 16))
    assert gradient_check(lambda: ppp_losses(logits, labels, cond, disc)[0], [logits], max_entries=32) < 1e-4
    w = disc.layers[0][0].weight
    assert gradient_check(lambda: ppp_losses(logits, labels, cond, disc)[1], [w], max_entries=32) < 1e-4


def test_generator_and_discriminator_updates_are_separate(tiny_samples):
    gen, disc = PPPGenerator(width=8, n_res=1), PatchDiscriminator(width=8)
    assert not {id(p) for p in gen.parameters()} & {id(p) for p in disc.parameters()}
    cond, labels = ppp_batch(tiny_samples[:1])
    g, d, _ = ppp_losses(gen(cond), labels, cond, disc)
    g.backward(inputs=list(gen.parameters()), retain_graph=True)
    assert all(p.grad is None for p in disc.parameters())
    assert any(p.grad is not None for p in gen.parameters())
    for p in gen.parameters():
        p.grad = None
    d.backward(inputs=list(disc.parameters()))
    assert all(p.grad is None for p in gen.parameters())


def test_training_deterministic(tiny_samples):
    def run():
        torch.manual_seed(7)
        gen, disc = PPPGenerator(width=8, n_res=1), PatchDiscriminator(width=8)
        h = train_ppp(gen, disc, tiny_samples, 1, np.random.default_rng(7), batch_size=3)
        return h, gen

    h1, g1 = run()
    h2, g2 = run()
    assert h1["g_loss"] == h2["g_loss"]
    assert all(torch.equal(a, b) for a, b in zip(g1.parameters(), g2.parameters()))
    with pytest.raises(ConfigError):
        train_ppp(g1, PatchDiscriminator(), [], 1, np.random.default_rng(0))
