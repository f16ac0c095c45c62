"""Experiment configuration: nested YAML, validated against the defaults.

Every key must exist in :data:`DEFAULTS` and carry a value of the same
type (ints are accepted where floats are expected).  Command-line
overrides use dotted paths, ``warp.lr=0.001``.
"""

from __future__ import annotations

import copy
import logging
from pathlib import Path

import yaml

from .errors import ConfigError

log = logging.getLogger(__name__)

DEFAULTS = {
    "seed": 0,
    "resolution": [96, 128],
    "betas": [0.5, 0.999],
    "data": {"train_per_category": 300, "val_per_category": 60, "test_per_category": 60},
    "ppp": {"lr": 0.002, "epochs": 3, "batch_size": 8, "lambda_adv": 0.1, "width": 32},
    "warp": {"lr": 0.0002, "epochs": 20, "batch_size": 8, "lambda_perc": 0.1, "lambda_tv": 0.3},
    "fusion": {"lr": 0.0001, "epochs": 20, "batch_size": 8, "base_width": 32, "levels": 0},
    "search": {
        "max_iterations": 25, "population": 40, "crossover_count": 15,
        "mutation_count": 15, "elitism_k": 10, "mutation_prob": 0.1,
    },
    "finetune": {"epochs": 2, "lr_scale": 0.5},
}


def _check(value, default, path):
    if isinstance(default, dict):
        if not isinstance(value, dict):
            raise ConfigError(f"config key {path or '<root>'} must be a mapping")
        for k, v in value.items():
            sub = f"{path}.{k}" if path else k
            if k not in default:
                raise ConfigError(f"unknown config key {sub}")
            _check(v, default[k], sub)
        return
    if isinstance(default, list):
        if not isinstance(value, list) or len(value) != len(default):
            raise ConfigError(f"config key {path} must be a list of {len(default)} values")
        for i, (v, d) in enumerate(zip(value, default)):
            _check(v, d, f"{path}[{i}]")
        return
    if isinstance(default, bool) or isinstance(value, bool):
        ok = isinstance(value, bool) and isinstance(default, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float))
    else:
        ok = isinstance(value, type(default))
    if not ok:
        raise ConfigError(f"config key {path} expects {type(default).__name__}, got {value!r}")


def _merge(base, over):
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(base.get(k), dict):
            _merge(base[k], v)
        else:
            base[k] = copy.deepcopy(v)
    return base


def _set_dotted(cfg, dotted, value):
    keys = dotted.split(".")
    node = cfg
    for k in keys[:-1]:
        if not isinstance(node.get(k), dict):
            raise ConfigError(f"unknown config key {dotted}")
        node = node[k]
    if keys[-1] not in node:
        raise ConfigError(f"unknown config key {dotted}")
    node[keys[-1]] = value


def parse_override(text):
    """``key.sub=value`` with the value parsed as YAML."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} must look like key=value")
    key, raw = text.split("=", 1)
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse override value {raw!r}: {e}") from None
    return key.strip(), value


def validate(cfg):
    _check(cfg, DEFAULTS, "")
    h, w = cfg["resolution"]
    if h <= 0 or w <= 0:
        raise ConfigError("resolution must be positive")
    for section in ("ppp", "warp", "fusion"):
        if cfg[section]["lr"] <= 0 or cfg[section]["batch_size"] < 1 or cfg[section]["epochs"] < 0:
            raise ConfigError(f"{section}: lr, batch_size and epochs must be positive")
    return cfg


def load_config(path=None, overrides=()):
    """Defaults <- YAML file <- overrides; returns the validated dict."""
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file {path} does not exist")
        try:
            loaded = yaml.safe_load(path.read_text()) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"invalid YAML in {path}: {e}") from None
        _check(loaded, DEFAULTS, "")
        _merge(cfg, loaded)
    for text in overrides:
        key, value = parse_override(text) if isinstance(text, str) else text
        _set_dotted(cfg, key, value)
        log.info("config override %s = %r", key, value)
    return validate(cfg)


def dump_config(cfg, path):
    Path(path).write_text(yaml.safe_dump(cfg, sort_keys=False))
