"""Discrete architecture encodings for the warping and fusion supernets.

Warp genomes use the op codes 0 = 1x1 conv, 1 = 3x3 conv, 2 = 1x1
depthwise-separable, 3 = 3x3 depthwise-separable and serialize as one
parenthesized op list per cell, e.g. ``(0,2,1) (0) (2) (2,1) (1,3)``.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, GenomeError, ParseError

N_CELLS = 5
BLOCK_CHOICES = (1, 2, 3)
OP_CODES = (0, 1, 2, 3)
OP_NAMES = {0: "1x1 conv", 1: "3x3 conv", 2: "1x1 dw-sep conv", 3: "3x3 dw-sep conv"}
# op code -> (kernel, depthwise_separable)
OP_TABLE = {0: (1, False), 1: (3, False), 2: (1, True), 3: (3, True)}

SKIPS = ("same", "previous", "next")
DOWN_KERNELS = (3, 4, 5)
UP_KERNELS = (3, 5)
FUSION_LEVELS = 5


class Category(str, enum.Enum):
    SHORT_SLEEVE = "short_sleeve"
    LONG_SLEEVE = "long_sleeve"
    SLING_VEST = "sling_vest"
    PANTS = "pants"
    SKIRT = "skirt"

    @property
    def is_upper(self) -> bool:
        return self in (Category.SHORT_SLEEVE, Category.LONG_SLEEVE, Category.SLING_VEST)

    @classmethod
    def parse(cls, value):
        try:
            return cls(value)
        except ValueError:
            names = ", ".join(c.value for c in cls)
            raise ArgumentError(f"unknown category {value!r}; expected one of {names}") from None


CATEGORIES = tuple(Category)


@dataclass(frozen=True)
class WarpGenome:
    cells: tuple

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(tuple(int(o) for o in c) for c in self.cells))

    def validate(self):
        if len(self.cells) != N_CELLS:
            raise GenomeError(f"warp genome needs {N_CELLS} cells, got {len(self.cells)}")
        for i, ops in enumerate(self.cells):
            if len(ops) not in BLOCK_CHOICES:
                raise GenomeError(f"cell {i}: block count {len(ops)} not in {BLOCK_CHOICES}")
            for o in ops:
                if o not in OP_CODES:
                    raise GenomeError(f"cell {i}: op code {o} out of range")
        return self

    @property
    def n_blocks(self):
        return tuple(len(c) for c in self.cells)

    def __str__(self):
        return serialize(self)


@dataclass(frozen=True)
class FusionGenome:
    skips: tuple
    down_ops: tuple
    up_ops: tuple

    def __post_init__(self):
        object.__setattr__(self, "skips", tuple(self.skips))
        object.__setattr__(self, "down_ops", tuple(int(k) for k in self.down_ops))
        object.__setattr__(self, "up_ops", tuple(int(k) for k in self.up_ops))

    @property
    def levels(self):
        return len(self.skips)

    def validate(self, levels=None):
        n = self.levels
        if levels is not None and n != levels:
            raise GenomeError(f"fusion genome has {n} levels, network expects {levels}")
        if not (len(self.down_ops) == len(self.up_ops) == n) or n < 2:
            raise GenomeError("fusion genome lists must have equal length >= 2")
        for i, s in enumerate(self.skips):
            if s not in SKIPS:
                raise GenomeError(f"level {i}: unknown skip {s!r}")
        for i, k in enumerate(self.down_ops):
            if k not in DOWN_KERNELS:
                raise GenomeError(f"level {i}: down kernel {k} not in {DOWN_KERNELS}")
        for i, k in enumerate(self.up_ops):
            if k not in UP_KERNELS:
                raise GenomeError(f"level {i}: up kernel {k} not in {UP_KERNELS}")
        return self

    def canonical(self) -> "FusionGenome":
        """Map boundary skips that point outside the encoder to ``same``."""
        skips = list(self.skips)
        if skips[0] == "next":
            skips[0] = "same"
        if skips[-1] == "previous":
            skips[-1] = "same"
        return FusionGenome(tuple(skips), self.down_ops, self.up_ops)

    def __str__(self):
        return serialize(self)


def warp_cell_choices() -> int:
    return sum(len(OP_CODES) ** n for n in BLOCK_CHOICES)


def warp_space_size() -> int:
    return warp_cell_choices() ** N_CELLS


def fusion_space_size(levels=FUSION_LEVELS) -> int:
    return (len(SKIPS) * len(DOWN_KERNELS) * len(UP_KERNELS)) ** levels


def _sample_cell(rng):
    n = int(rng.choice(BLOCK_CHOICES))
    return tuple(int(o) for o in rng.integers(0, len(OP_CODES), size=n))


def sample_warp_genome(rng: np.random.Generator) -> WarpGenome:
    return WarpGenome(tuple(_sample_cell(rng) for _ in range(N_CELLS)))


def sample_fusion_genome(rng: np.random.Generator, levels=FUSION_LEVELS) -> FusionGenome:
    skips = [SKIPS[i] for i in rng.integers(0, len(SKIPS), size=levels)]
    downs = [DOWN_KERNELS[i] for i in rng.integers(0, len(DOWN_KERNELS), size=levels)]
    ups = [UP_KERNELS[i] for i in rng.integers(0, len(UP_KERNELS), size=levels)]
    return FusionGenome(skips, downs, ups).canonical()


def mutate(genome, per_gene_prob: float, rng: np.random.Generator):
    """Resample each gene independently with probability ``per_gene_prob``.

    A warp cell whose block count is resampled gets a fresh op list.
    """
    if isinstance(genome, WarpGenome):
        cells = []
        for ops in genome.cells:
            if rng.random() < per_gene_prob:
                n = int(rng.choice(BLOCK_CHOICES))
                if n != len(ops):
                    ops = tuple(int(o) for o in rng.integers(0, len(OP_CODES), size=n))
            ops = tuple(
                int(rng.integers(0, len(OP_CODES))) if rng.random() < per_gene_prob else o
                for o in ops
            )
            cells.append(ops)
        return WarpGenome(tuple(cells))
    if isinstance(genome, FusionGenome):

        def pick(values, current):
            return values[int(rng.integers(0, len(values)))] if rng.random() < per_gene_prob else current

        skips = [pick(SKIPS, s) for s in genome.skips]
        downs = [pick(DOWN_KERNELS, k) for k in genome.down_ops]
        ups = [pick(UP_KERNELS, k) for k in genome.up_ops]
        return FusionGenome(skips, downs, ups).canonical()
    raise ArgumentError(f"cannot mutate {type(genome).__name__}")


def crossover(a, b, rng: np.random.Generator):
    if type(a) is not type(b):
        raise ArgumentError(f"crossover of {type(a).__name__} with {type(b).__name__}")
    if isinstance(a, WarpGenome):
        take = rng.random(N_CELLS) < 0.5
        return WarpGenome(tuple(ca if t else cb for t, ca, cb in zip(take, a.cells, b.cells)))
    if isinstance(a, FusionGenome):
        if a.levels != b.levels:
            raise ArgumentError("crossover of fusion genomes with different depths")
        take = rng.random(a.levels) < 0.5
        src = [a if t else b for t in take]
        return FusionGenome(
            [g.skips[i] for i, g in enumerate(src)],
            [g.down_ops[i] for i, g in enumerate(src)],
            [g.up_ops[i] for i, g in enumerate(src)],
        ).canonical()
    raise ArgumentError(f"cannot cross {type(a).__name__}")


def gene_vector(genome) -> tuple:
    """Flat scalar genes; absent warp ops are ``None``."""
    if isinstance(genome, WarpGenome):
        out = []
        for ops in genome.cells:
            out.append(len(ops))
            out.extend(ops[i] if i < len(ops) else None for i in range(max(BLOCK_CHOICES)))
        return tuple(out)
    out = []
    for triple in zip(genome.skips, genome.down_ops, genome.up_ops):
        out.extend(triple)
    return tuple(out)


def hamming(a, b) -> int:
    va, vb = gene_vector(a), gene_vector(b)
    if len(va) != len(vb):
        raise ArgumentError("genomes have different gene counts")
    return sum(x != y for x, y in zip(va, vb))


# -- text format -------------------------------------------------------------


def serialize(genome) -> str:
    if isinstance(genome, WarpGenome):
        return " ".join("(" + ",".join(str(o) for o in ops) + ")" for ops in genome.cells)
    if isinstance(genome, FusionGenome):
        return "skips={} down={} up={}".format(
            ",".join(genome.skips),
            ",".join(str(k) for k in genome.down_ops),
            ",".join(str(k) for k in genome.up_ops),
        )
    raise ArgumentError(f"cannot serialize {type(genome).__name__}")


def parse_warp(text: str) -> WarpGenome:
    cells = []
    i, n = 0, len(text)
    while True:
        while i < n and text[i].isspace():
            i += 1
        if i == n:
            break
        if text[i] != "(":
            raise ParseError(f"expected '(' but found {text[i]!r}", i)
        i += 1
        ops = []
        while True:
            while i < n and text[i].isspace():
                i += 1
            m = re.compile(r"\d+").match(text, i)
            if not m:
                raise ParseError("expected an op code", i)
            code = int(m.group())
            if code not in OP_CODES:
                raise ParseError(f"op code {code} out of range 0-3", i)
            ops.append(code)
            i = m.end()
            while i < n and text[i].isspace():
                i += 1
            if i < n and text[i] == ",":
                i += 1
                continue
            if i < n and text[i] == ")":
                i += 1
                break
            raise ParseError("expected ',' or ')'", i)
        if len(ops) not in BLOCK_CHOICES:
            raise ParseError(f"cell has {len(ops)} ops, expected 1-3", i)
        cells.append(tuple(ops))
    if len(cells) != N_CELLS:
        raise ParseError(f"expected {N_CELLS} cells, found {len(cells)}", len(text))
    return WarpGenome(tuple(cells))


_FIELD = re.compile(r"\s*(skips|down|up)=([^\s]*)")


def parse_fusion(text: str) -> FusionGenome:
    fields = {}
    i = 0
    while i < len(text.rstrip()):
        m = _FIELD.match(text, i)
        if not m:
            raise ParseError("expected skips=..., down=... or up=...", i)
        key, val = m.group(1), m.group(2)
        if key in fields:
            raise ParseError(f"duplicate field {key!r}", m.start(1))
        items = val.split(",") if val else []
        pos = m.start(2)
        parsed = []
        for item in items:
            if key == "skips":
                if item not in SKIPS:
                    raise ParseError(f"unknown skip {item!r}", pos)
                parsed.append(item)
            else:
                allowed = DOWN_KERNELS if key == "down" else UP_KERNELS
                if not item.isdigit() or int(item) not in allowed:
                    raise ParseError(f"{key} kernel {item!r} not in {allowed}", pos)
                parsed.append(int(item))
            pos += len(item) + 1
        fields[key] = parsed
        i = m.end()
    for key in ("skips", "down", "up"):
        if key not in fields:
            raise ParseError(f"missing field {key!r}", len(text))
    g = FusionGenome(fields["skips"], fields["down"], fields["up"])
    try:
        g.validate()
    except GenomeError as e:
        raise ParseError(str(e), 0) from None
    return g


def parse(text: str):
    stripped = text.lstrip()
    if stripped.startswith("("):
        return parse_warp(text)
    return parse_fusion(text)


# searched architectures reported for the five categories at 192x256
PUBLISHED_WARP_GENOMES = {
    Category.SHORT_SLEEVE: "(0,2,1) (0) (2) (2,1) (1,3)",
    Category.LONG_SLEEVE: "(0,1,1) (0) (0) (3,2,3) (3,3,3)",
    Category.SLING_VEST: "(0,0,1) (3,1,1) (0) (1,1) (1,3)",
    Category.PANTS: "(0) (2) (3,3,3) (0,3,3) (1,3)",
    Category.SKIRT: "(0,0,1) (2,1) (0) (3,1,3) (3,3,3)",
}

BASELINE_WARP_GENOME = WarpGenome(((1,),) * N_CELLS)


def unet_genome(levels=FUSION_LEVELS) -> FusionGenome:
    return FusionGenome(("same",) * levels, (3,) * levels, (3,) * levels)
