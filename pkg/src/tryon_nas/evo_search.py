"""Evolutionary search over frozen supernet weights.

Each generation is fully evaluated, the top ``elitism_k`` survive, and the
rest of the next population is filled with crossover children of elite
pairs, mutants of elites, and fresh uniform samples.  Genomes are unique
within a generation and fitness values are cached by genome.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from .errors import ConfigError
from .metrics import ssim_per_image
from .search_space import (
    Category,
    crossover,
    mutate,
    parse,
    sample_fusion_genome,
    sample_warp_genome,
    serialize,
)
from .supernet_fusion import prepare_batch
from .synthdata import WARP_KEYS, batches, collate

log = logging.getLogger(__name__)

MAX_RESAMPLE = 200


@dataclass
class SearchConfig:
    max_iterations: int = 25
    population: int = 40
    crossover_count: int = 15
    mutation_count: int = 15
    elitism_k: int = 10
    mutation_prob: float = 0.1
    category: str | None = None

    def validate(self):
        for name in ("max_iterations", "population", "elitism_k"):
            if getattr(self, name) < 1:
                raise ConfigError(f"search {name} must be >= 1")
        if self.crossover_count < 0 or self.mutation_count < 0:
            raise ConfigError("crossover and mutation counts must be non-negative")
        if self.crossover_count + self.mutation_count + self.elitism_k > self.population:
            raise ConfigError(
                f"crossover ({self.crossover_count}) + mutation ({self.mutation_count}) + elites "
                f"({self.elitism_k}) exceed the population size {self.population}"
            )
        if not 0.0 <= self.mutation_prob <= 1.0:
            raise ConfigError(f"mutation_prob {self.mutation_prob} outside [0, 1]")
        return self


@dataclass
class SearchRecord:
    generations: list = field(default_factory=list)  # list of [(genome, fitness), ...]
    best: list = field(default_factory=list)  # best-so-far (genome, fitness) per generation
    seed: int | None = None
    checkpoint_id: str | None = None
    config: dict = field(default_factory=dict)

    @property
    def best_genome(self):
        return self.best[-1][0]

    @property
    def best_fitness(self):
        return self.best[-1][1]

    def to_lines(self):
        """One JSON object per line: a header, then one per generation."""
        yield json.dumps({"seed": self.seed, "checkpoint_id": self.checkpoint_id, "config": self.config})
        for i, (members, (bg, bf)) in enumerate(zip(self.generations, self.best)):
            yield json.dumps({
                "generation": i,
                "members": [[serialize(g), f] for g, f in members],
                "best": [serialize(bg), bf],
            })

    def write(self, path):
        Path(path).write_text("\n".join(self.to_lines()) + "\n")

    @classmethod
    def read(cls, path):
        lines = Path(path).read_text().splitlines()
        head = json.loads(lines[0])
        rec = cls(seed=head["seed"], checkpoint_id=head["checkpoint_id"], config=head["config"])
        for line in lines[1:]:
            gen = json.loads(line)
            rec.generations.append([(parse(g), f) for g, f in gen["members"]])
            rec.best.append((parse(gen["best"][0]), gen["best"][1]))
        return rec


def evolve(config: SearchConfig, sample_fn, mutate_fn, crossover_fn, fitness_fn, rng: np.random.Generator,
           *, seed=None, checkpoint_id=None, on_generation=None) -> SearchRecord:
    """Run the search.  ``sample_fn(rng)``, ``mutate_fn(g, rng)`` and
    ``crossover_fn(a, b, rng)`` produce genomes; ``fitness_fn(g)`` scores one
    (higher is better)."""
    config.validate()
    cache = {}
    record = SearchRecord(seed=seed, checkpoint_id=checkpoint_id, config=asdict(config))

    def score(g):
        if g not in cache:
            cache[g] = float(fitness_fn(g))
        return cache[g]

    def add_unique(pop, seen, make):
        for _ in range(MAX_RESAMPLE):
            g = make()
            if g not in seen:
                break
        else:
            # the operator keeps reproducing existing members; fall back to uniform samples
            for _ in range(MAX_RESAMPLE):
                g = sample_fn(rng)
                if g not in seen:
                    break
            else:
                return
        seen.add(g)
        pop.append(g)

    pop, seen = [], set()
    while len(pop) < config.population:
        before = len(pop)
        add_unique(pop, seen, lambda: sample_fn(rng))
        if len(pop) == before:
            break
    best = None
    for gen in range(config.max_iterations):
        scored = [(g, score(g)) for g in pop]
        record.generations.append(scored)
        ranked = sorted(scored, key=lambda gf: -gf[1])
        if best is None or ranked[0][1] > best[1]:
            best = ranked[0]
        record.best.append(best)
        if on_generation:
            on_generation(gen, scored, best)
        log.info("generation %d: best %.4f (%s)", gen, best[1], serialize(best[0]))
        if gen == config.max_iterations - 1:
            break

        elites = [g for g, _ in ranked[: config.elitism_k]]
        pop, seen = list(elites), set(elites)

        def pick():
            return elites[int(rng.integers(len(elites)))]

        for _ in range(config.crossover_count):
            add_unique(pop, seen, lambda: crossover_fn(pick(), pick(), rng))
        for _ in range(config.mutation_count):
            add_unique(pop, seen, lambda: mutate_fn(pick(), rng))
        while len(pop) < config.population:
            before = len(pop)
            add_unique(pop, seen, lambda: sample_fn(rng))
            if len(pop) == before:
                break
    return record


# -- fitness -------------------------------------------------------------------


def category_subset(samples, category):
    category = Category.parse(category)
    sub = [s for s in samples if s.category == category]
    if not sub:
        raise ConfigError(f"no validation samples for category {category.value!r}")
    return sub


@torch.no_grad()
def fitness_warp(genome, supernet, val_samples, category=None, batch_size=16):
    """Mean SSIM between the warped garment and the ground-truth garment on
    the person, over the category's validation samples."""
    samples = category_subset(val_samples, category) if category is not None else list(val_samples)
    if not samples:
        raise ConfigError("empty validation split")
    supernet.eval()
    scores = []
    for chunk in batches(samples, batch_size):
        b = collate(chunk, WARP_KEYS)
        out = supernet(genome, b["garment_mask"], b["target_mask"], b["garment"])
        scores.append(ssim_per_image(out.warped_garment, b["warped_garment"]))
    return float(torch.cat(scores).mean())


@torch.no_grad()
def fitness_fusion(genome, supernet, val_samples, batch_size=8):
    """Mean SSIM between the synthesized and real person over all categories."""
    if not val_samples:
        raise ConfigError("empty validation split")
    supernet.eval()
    scores = []
    for chunk in batches(list(val_samples), batch_size):
        x, wg, person, _ = prepare_batch(chunk)
        out = supernet(genome, x, wg)
        scores.append(ssim_per_image((out.final + 1) / 2, (person + 1) / 2))
    return float(torch.cat(scores).mean())


def search_warp(supernet, val_samples, category, config=None, seed=0, checkpoint_id=None, **kw):
    config = config or SearchConfig(category=Category.parse(category).value)
    subset = category_subset(val_samples, category)
    rng = np.random.default_rng(seed)
    return evolve(
        config,
        sample_warp_genome,
        lambda g, r: mutate(g, config.mutation_prob, r),
        crossover,
        lambda g: fitness_warp(g, supernet, subset),
        rng, seed=seed, checkpoint_id=checkpoint_id, **kw,
    )


def search_fusion(supernet, val_samples, config=None, seed=0, checkpoint_id=None, **kw):
    config = config or SearchConfig()
    if not val_samples:
        raise ConfigError("empty validation split")
    rng = np.random.default_rng(seed)
    levels = supernet.levels
    return evolve(
        config,
        lambda r: sample_fusion_genome(r, levels),
        lambda g, r: mutate(g, config.mutation_prob, r),
        crossover,
        lambda g: fitness_fusion(g, supernet, val_samples),
        rng, seed=seed, checkpoint_id=checkpoint_id, **kw,
    )
