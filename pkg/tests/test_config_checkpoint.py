import pytest
import torch

from tryon_nas.checkpoint import latest_checkpoint, load_checkpoint, save_checkpoint
from tryon_nas.config import DEFAULTS, dump_config, load_config, parse_override
from tryon_nas.errors import ConfigError
from tryon_nas.perceptual import PerceptualLoss, RandomConvFeatures, default_layer_weights


def test_defaults():
    cfg = load_config()
    assert cfg == DEFAULTS
    assert (cfg["ppp"]["lr"], cfg["warp"]["lr"], cfg["fusion"]["lr"]) == (0.002, 0.0002, 0.0001)
    assert cfg["betas"] == [0.5, 0.999]
    assert (cfg["ppp"]["lambda_adv"], cfg["warp"]["lambda_perc"], cfg["warp"]["lambda_tv"]) == (0.1, 0.1, 0.3)
    assert (cfg["ppp"]["epochs"], cfg["warp"]["epochs"], cfg["fusion"]["epochs"]) == (3, 20, 20)


def test_file_then_flags(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("warp:\n  epochs: 5\n  lr: 0.001\nseed: 3\n")
    cfg = load_config(p, ["warp.epochs=7", "resolution=[64, 48]"])
    assert cfg["warp"]["epochs"] == 7  # flag wins
    assert cfg["warp"]["lr"] == 0.001 and cfg["seed"] == 3
    assert cfg["resolution"] == [64, 48]
    assert cfg["ppp"] == DEFAULTS["ppp"]
    dump_config(cfg, tmp_path / "out.yaml")
    assert load_config(tmp_path / "out.yaml") == cfg


@pytest.mark.parametrize("text,overrides", [
    ("warp:\n  epochz: 5\n", []),
    ("warp:\n  epochs: five\n", []),
    ("resolution: [64]\n", []),
    ("", ["nope.x=1"]),
    ("", ["warp.lr"]),
    ("", ["warp.lr=-1"]),
])
def test_invalid(tmp_path, text, overrides):
    p = tmp_path / "c.yaml"
    p.write_text(text)
    with pytest.raises(ConfigError):
        load_config(p, overrides)


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/c.yaml")


def test_parse_override():
    assert parse_override("a.b=0.5") == ("a.b", 0.5)
    assert parse_override("resolution=[1, 2]") == ("resolution", [1, 2])


def test_checkpoint_roundtrip(tmp_path):
    state = {"w": torch.arange(4.0)}
    save_checkpoint(tmp_path, "epoch_1", state, {"epoch": 1})
    save_checkpoint(tmp_path, "epoch_10", state, {"epoch": 10})
    save_checkpoint(tmp_path, "epoch_2", state, {"epoch": 2})
    latest = latest_checkpoint(tmp_path)
    assert latest.name == "epoch_10.pt"
    loaded, meta = load_checkpoint(latest)
    assert torch.equal(loaded["w"], state["w"])
    assert meta == {"schema_version": 1, "weights": "epoch_10.pt", "epoch": 10}
    assert latest_checkpoint(tmp_path / "empty") is None


def test_perceptual_properties():
    torch.manual_seed(0)
    x, y = torch.rand(2, 3, 32, 32), torch.rand(2, 3, 32, 32)
    loss = PerceptualLoss()
    assert loss(x, x).item() == 0.0
    assert loss(x, y).item() > 0
    assert default_layer_weights() == (1 / 32, 1 / 16, 1 / 8, 1 / 4, 1 / 2, 1.0)
    # fixed seed: two extractors are identical and frozen
    a, b = RandomConvFeatures(), RandomConvFeatures()
    assert all(torch.equal(p, q) for p, q in zip(a.parameters(), b.parameters()))
    assert not any(p.requires_grad for p in a.parameters())
    assert len(a(x)) == 6
