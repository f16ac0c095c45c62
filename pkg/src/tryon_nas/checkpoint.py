"""Weight blobs with JSON sidecar manifests."""

from __future__ import annotations

import json
from pathlib import Path

import torch

SCHEMA_VERSION = 1


def save_checkpoint(directory, name, state, manifest):
    """Write ``<name>.pt`` (torch state) and ``<name>.json`` (manifest)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    torch.save(state, directory / f"{name}.pt")
    meta = {"schema_version": SCHEMA_VERSION, "weights": f"{name}.pt", **manifest}
    (directory / f"{name}.json").write_text(json.dumps(meta, indent=1, default=str))
    return directory / f"{name}.pt"


def load_checkpoint(path):
    path = Path(path)
    if path.suffix != ".pt":
        path = path.with_suffix(".pt")
    state = torch.load(path, map_location="cpu", weights_only=True)
    meta_path = path.with_suffix(".json")
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    return state, meta


def latest_checkpoint(directory, prefix="epoch"):
    paths = sorted(Path(directory).glob(f"{prefix}_*.pt"), key=lambda p: int(p.stem.rsplit("_", 1)[1]))
    return paths[-1] if paths else None
