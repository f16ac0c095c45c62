"""End-to-end try-on: partial parsing -> category warping net -> fusion."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn.functional as F

from .errors import MissingStageError
from .ppp import ppp_batch
from .search_space import Category
from .supernet_fusion import fusion_input
from .synthdata import N_PARSING, PARSING_LABELS, collate

_P = {name: i for i, name in enumerate(PARSING_LABELS)}
# partial class -> parsing label, for upper-body and lower-body garments
_UPPER = {1: _P["upper_garment"], 2: _P["arms"], 3: _P["neck"]}
_LOWER = {1: _P["lower_garment"], 2: _P["legs"], 3: _P["shoes"]}
PRESERVED = 4


def merge_parsing(partial, person_parsing, upper: bool):
    """Combine predicted partial parsing with the preserved person's parsing.

    Predicted changed classes win inside the predicted region; pixels
    predicted as ``preserved`` keep the person's own label, and predicted
    background stays background.
    """
    table = _UPPER if upper else _LOWER
    out = torch.where(partial == PRESERVED, person_parsing, torch.zeros_like(person_parsing))
    for cls, label in table.items():
        out = torch.where(partial == cls, torch.full_like(out, label), out)
    return out


@dataclass
class TryOnModels:
    ppp: torch.nn.Module
    warp_nets: dict = field(default_factory=dict)  # category value -> (WarpSupernet, WarpGenome)
    fusion: tuple | None = None  # (FusionSupernet, FusionGenome)

    def warp_for(self, category):
        key = Category.parse(category).value
        if key not in self.warp_nets:
            raise MissingStageError("search-warp", f"no warping network for category {key!r}; run "
                                    f"`search-warp --category {key}`")
        return self.warp_nets[key]


@torch.no_grad()
def run_tryon(models: TryOnModels, persons, garments):
    """Dress each person in the paired garment.  All garments in one call
    must share a category.  Returns a dict of tensors, images in [0, 1]."""
    cats = {Category.parse(g.category) for g in garments}
    if len(cats) != 1:
        raise ValueError("run_tryon expects garments of a single category per call")
    category = cats.pop()
    for m in (models.ppp, *(n for n, _ in models.warp_nets.values())):
        m.eval()

    pb = collate(persons, ("body_shape", "pose", "head", "parsing", "preserved_person"))
    gb = collate(garments, ("garment", "garment_mask"))
    cond = torch.cat([pb["body_shape"], pb["pose"], pb["head"], gb["garment"]], 1)
    partial = models.ppp(cond).argmax(1)
    target_mask = (partial == 1).float()[:, None]

    warp_net, warp_genome = models.warp_for(category)
    w = warp_net(warp_genome, gb["garment_mask"], target_mask, gb["garment"])
    out = {"partial": partial, "target_mask": target_mask, "warped_garment": w.warped_garment,
           "warped_mask": w.warped_mask}
    if models.fusion is None:
        return out
    fusion_net, fusion_genome = models.fusion
    fusion_net.eval()
    parsing = merge_parsing(partial, pb["parsing"], category.is_upper)
    onehot = F.one_hot(parsing, N_PARSING).permute(0, 3, 1, 2).float()
    x = fusion_input(pb["preserved_person"], w.warped_garment, onehot, pb["pose"])
    f = fusion_net(fusion_genome, x, w.warped_garment * 2 - 1)
    out.update(fusion_mask=f.mask, coarse=(f.coarse + 1) / 2, final=(f.final + 1) / 2, parsing=parsing)
    return out


def ppp_condition(samples):
    return ppp_batch(samples)[0]


def to_uint8_image(t):
    """(C, h, w) tensor in [0, 1] -> (h, w, C) uint8 array."""
    a = t.detach().clamp(0, 1).cpu().numpy()
    if a.shape[0] == 1:
        a = a[0]
    else:
        a = a.transpose(1, 2, 0)
    return (a * 255 + 0.5).astype(np.uint8)
