"""Command-line interface.

Layout under ``--workdir`` (default ``./work``)::

    data/                          gen-data output (manifest + splits)
    runs/<run-id>/<stage>/...      one append-only directory per stage

Every stage directory gets the fully resolved ``config.yaml`` before any
work starts, a ``metrics.csv`` with (run_id, split, metric, value) rows and
whatever checkpoints / records / images the stage produces.  Downstream
stages look their inputs up inside the same run.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np
import torch

from . import config as config_mod
from .checkpoint import latest_checkpoint, load_checkpoint, save_checkpoint
from .errors import ArgumentError, ConfigError, MissingStageError, TryOnError
from .evo_search import SearchConfig, SearchRecord, fitness_fusion, fitness_warp, search_fusion, search_warp
from .metrics import append_metric_rows, read_metric_rows, ssim_per_image
from .ppp import PatchDiscriminator, PPPGenerator, evaluate as evaluate_ppp, train_ppp
from .search_space import (
    BASELINE_WARP_GENOME,
    CATEGORIES,
    Category,
    FusionGenome,
    WarpGenome,
    parse,
    serialize,
)
from .supernet_fusion import FusionSupernet, train_fusion_supernet
from .supernet_warping import WarpSupernet, train_supernet
from .synthdata import (
    check_resolution,
    generate_all,
    load_split,
    read_manifest,
    save_dataset,
    split,
)

log = logging.getLogger("tryon_nas")


# -- workspace helpers -----------------------------------------------------------


class Workspace:
    def __init__(self, root, run_id, data=None):
        self.root = Path(root)
        self.run_id = run_id
        self.data = Path(data) if data else self.root / "data"
        self.run = self.root / "runs" / run_id

    def stage(self, *parts):
        return self.run.joinpath(*parts)

    def new_stage(self, cfg, *parts):
        """Create a fresh stage directory; refuse to overwrite."""
        d = self.stage(*parts)
        if d.exists():
            raise ConfigError(
                f"{d} already exists; run directories are append-only, pick another --run-id"
            )
        d.mkdir(parents=True)
        config_mod.dump_config(cfg, d / "config.yaml")
        return d

    def require(self, *parts, hint=""):
        d = self.stage(*parts)
        if not d.is_dir():
            raise MissingStageError("/".join(parts), hint)
        return d

    def metrics(self, d, rows):
        append_metric_rows(d / "metrics.csv", [(self.run_id, s, m, v) for s, m, v in rows])


def _resolution(cfg):
    return tuple(cfg["resolution"])


def _data_multiple(cfg):
    return 32 if _resolution(cfg)[0] >= 128 else 16


def _load(ws, split_name, categories=None):
    read_manifest_or_fail(ws)
    samples = load_split(ws.data, split_name, categories)
    if not samples:
        raise ConfigError(f"split {split_name!r} in {ws.data} is empty")
    return samples


def read_manifest_or_fail(ws):
    if not (ws.data / "manifest.json").exists():
        raise MissingStageError("gen-data", f"no dataset at {ws.data}; run `tryon-nas gen-data` first")
    return read_manifest(ws.data)


def _check_data_resolution(ws, cfg):
    man = read_manifest_or_fail(ws)
    if tuple(man["resolution"]) != _resolution(cfg):
        raise ConfigError(
            f"dataset resolution {man['resolution']} differs from configured {list(cfg['resolution'])}"
        )
    return man


def _latest(d, stage):
    ck = latest_checkpoint(d / "checkpoints")
    if ck is None:
        raise MissingStageError(stage, f"{d} has no checkpoints")
    return ck


def _seed_all(seed):
    torch.manual_seed(seed)
    return np.random.default_rng(seed)


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=1))


def load_warp_supernet(ws, cfg):
    d = ws.require("warp_supernet", hint="run `tryon-nas train-warp` first")
    ck = _latest(d, "warp_supernet")
    state, meta = load_checkpoint(ck)
    net = WarpSupernet(tuple(meta.get("resolution", cfg["resolution"])))
    net.load_state_dict(state)
    return net, f"{d.name}/{ck.name}"


def load_fusion_supernet(ws, cfg):
    d = ws.require("fusion_supernet", hint="run `tryon-nas train-fusion` first")
    ck = _latest(d, "fusion_supernet")
    state, meta = load_checkpoint(ck)
    net = FusionSupernet(tuple(meta["resolution"]), levels=meta["levels"], base_width=meta["base_width"])
    net.load_state_dict(state)
    return net, f"{d.name}/{ck.name}"


def load_ppp(ws, cfg):
    d = ws.require("ppp", hint="run `tryon-nas train-ppp` first")
    state, meta = load_checkpoint(_latest(d, "ppp"))
    gen = PPPGenerator(width=meta.get("width", cfg["ppp"]["width"]))
    gen.load_state_dict(state["generator"])
    return gen


def searched_genome(ws, *parts, hint):
    d = ws.require(*parts, hint=hint)
    path = d / "best_genome.txt"
    if not path.exists():
        raise MissingStageError("/".join(parts), f"{path} missing")
    return parse(path.read_text().strip())


def warp_model_for(ws, cfg, category):
    """Searched genome for ``category`` with fine-tuned weights if present."""
    cat = Category.parse(category).value
    genome = searched_genome(ws, "search_warp", cat, hint=f"run `tryon-nas search-warp --category {cat}`")
    ft = ws.stage("finetune", f"warp_{cat}")
    if ft.is_dir() and latest_checkpoint(ft / "checkpoints"):
        state, meta = load_checkpoint(latest_checkpoint(ft / "checkpoints"))
        net = WarpSupernet(tuple(meta["resolution"]))
        net.load_state_dict(state)
        return net, genome, "finetuned"
    net, _ = load_warp_supernet(ws, cfg)
    return net, genome, "supernet"


def fusion_model(ws, cfg):
    genome = searched_genome(ws, "search_fusion", hint="run `tryon-nas search-fusion`")
    ft = ws.stage("finetune", "fusion")
    if ft.is_dir() and latest_checkpoint(ft / "checkpoints"):
        state, meta = load_checkpoint(latest_checkpoint(ft / "checkpoints"))
        net = FusionSupernet(tuple(meta["resolution"]), levels=meta["levels"], base_width=meta["base_width"])
        net.load_state_dict(state)
        return net, genome, "finetuned"
    net, _ = load_fusion_supernet(ws, cfg)
    return net, genome, "supernet"


# -- commands ----------------------------------------------------------------------


def cmd_gen_data(args, cfg, ws):
    res = _resolution(cfg)
    check_resolution(res, _data_multiple(cfg))
    if ws.data.exists() and any(ws.data.iterdir()):
        raise ConfigError(f"{ws.data} is not empty; datasets are never overwritten")
    d = cfg["data"]
    n_tr, n_va, n_te = d["train_per_category"], d["val_per_category"], d["test_per_category"]
    total = n_tr + n_va + n_te
    if total < 1:
        raise ConfigError("dataset needs at least one sample per category")
    t = time.time()
    samples = generate_all(total, res, cfg["seed"], multiple=_data_multiple(cfg))
    splits = split(samples, (n_tr / total, n_va / total, n_te / total), seed=cfg["seed"])
    ws.data.mkdir(parents=True, exist_ok=True)
    config_mod.dump_config(cfg, ws.data / "config.yaml")
    man = save_dataset(splits, ws.data, cfg["seed"], res)
    log.info("wrote %d samples to %s in %.0fs", len(samples), ws.data, time.time() - t)
    print(json.dumps(man["counts"]))


def cmd_train_ppp(args, cfg, ws):
    _check_data_resolution(ws, cfg)
    c = cfg["ppp"]
    d = ws.new_stage(cfg, "ppp")
    rng = _seed_all(cfg["seed"])
    train, val = _load(ws, "train"), _load(ws, "val")
    gen, disc = PPPGenerator(width=c["width"]), PatchDiscriminator()
    hist = train_ppp(gen, disc, train, c["epochs"], rng, lr=c["lr"], betas=tuple(cfg["betas"]),
                     batch_size=c["batch_size"], val_samples=val, checkpoint_dir=d / "checkpoints",
                     seed=cfg["seed"], lambda_adv=c["lambda_adv"])
    _write_json(d / "history.json", hist)
    rows = []
    for e, v in enumerate(hist["val"], 1):
        rows += [("val", f"ppp_pixel_acc/epoch{e}", v["pixel_acc"]), ("val", f"ppp_pixel_ce/epoch{e}", v["pixel_ce"])]
    ws.metrics(d, rows)
    # the generator width is needed to rebuild the network
    for meta_path in (d / "checkpoints").glob("*.json"):
        meta = json.loads(meta_path.read_text())
        meta["width"] = c["width"]
        _write_json(meta_path, meta)


def cmd_train_warp(args, cfg, ws):
    _check_data_resolution(ws, cfg)
    c = cfg["warp"]
    d = ws.new_stage(cfg, "warp_supernet")
    rng = _seed_all(cfg["seed"])
    train, val = _load(ws, "train"), _load(ws, "val")
    net = WarpSupernet(_resolution(cfg))
    hist = train_supernet(net, train, c["epochs"], rng, lr=c["lr"], betas=tuple(cfg["betas"]),
                          batch_size=c["batch_size"], val_samples=val, checkpoint_dir=d / "checkpoints",
                          seed=cfg["seed"], lambda_perc=c["lambda_perc"], lambda_tv=c["lambda_tv"])
    _write_json(d / "history.json", hist)
    ws.metrics(d, [("val", f"warp_val_mask/epoch{e}", v) for e, v in enumerate(hist["val_mask"], 1)])


def cmd_train_fusion(args, cfg, ws):
    _check_data_resolution(ws, cfg)
    c = cfg["fusion"]
    d = ws.new_stage(cfg, "fusion_supernet")
    rng = _seed_all(cfg["seed"])
    train, val = _load(ws, "train"), _load(ws, "val")
    net = FusionSupernet(_resolution(cfg), levels=c["levels"] or None, base_width=c["base_width"])
    hist = train_fusion_supernet(net, train, c["epochs"], rng, lr=c["lr"], betas=tuple(cfg["betas"]),
                                 batch_size=c["batch_size"], val_samples=val,
                                 checkpoint_dir=d / "checkpoints", seed=cfg["seed"])
    _write_json(d / "history.json", hist)
    ws.metrics(d, [("val", f"fusion_val_ssim/epoch{e}", v) for e, v in enumerate(hist["val_ssim"], 1)])


def _search_config(cfg, category=None):
    return SearchConfig(**cfg["search"], category=category).validate()


def cmd_search_warp(args, cfg, ws):
    cat = Category.parse(args.category).value
    net, ck = load_warp_supernet(ws, cfg)
    val = _load(ws, "val", [cat])
    d = ws.new_stage(cfg, "search_warp", cat)
    torch.manual_seed(cfg["seed"])
    rec = search_warp(net, val, cat, _search_config(cfg, cat), seed=cfg["seed"], checkpoint_id=ck)
    rec.write(d / "search_record.jsonl")
    (d / "best_genome.txt").write_text(serialize(rec.best_genome) + "\n")
    baseline = fitness_warp(BASELINE_WARP_GENOME, net, val)
    ws.metrics(d, [("val", f"warp_search_best_ssim/{cat}", rec.best_fitness),
                   ("val", f"warp_baseline_ssim/{cat}", baseline)])
    print(f"{cat}: {serialize(rec.best_genome)}  fitness {rec.best_fitness:.4f}  baseline {baseline:.4f}")


def cmd_search_fusion(args, cfg, ws):
    net, ck = load_fusion_supernet(ws, cfg)
    val = _load(ws, "val")
    d = ws.new_stage(cfg, "search_fusion")
    torch.manual_seed(cfg["seed"])
    rec = search_fusion(net, val, _search_config(cfg), seed=cfg["seed"], checkpoint_id=ck)
    rec.write(d / "search_record.jsonl")
    (d / "best_genome.txt").write_text(serialize(rec.best_genome) + "\n")
    ws.metrics(d, [("val", "fusion_search_best_ssim", rec.best_fitness)])
    print(f"fusion: {serialize(rec.best_genome)}  fitness {rec.best_fitness:.4f}")


def cmd_finetune(args, cfg, ws):
    path = Path(args.genome)
    if not path.exists():
        raise ConfigError(f"genome file {path} does not exist")
    genome = parse(path.read_text().strip())
    rng = _seed_all(cfg["seed"])
    betas = tuple(cfg["betas"])
    ft = cfg["finetune"]
    if isinstance(genome, WarpGenome):
        if not args.category:
            raise ArgumentError("fine-tuning a warping genome needs --category")
        cat = Category.parse(args.category).value
        net, ck = load_warp_supernet(ws, cfg)
        train, val = _load(ws, "train", [cat]), _load(ws, "val", [cat])
        d = ws.new_stage(cfg, "finetune", f"warp_{cat}")
        before = fitness_warp(genome, net, val)
        c = cfg["warp"]
        train_supernet(net, train, ft["epochs"], rng, lr=c["lr"] * ft["lr_scale"], betas=betas,
                       batch_size=c["batch_size"], fixed_genome=genome, checkpoint_dir=d / "checkpoints",
                       seed=cfg["seed"], lambda_perc=c["lambda_perc"], lambda_tv=c["lambda_tv"])
        after = fitness_warp(genome, net, val)
        name = f"warp_ssim/{cat}"
    else:
        net, ck = load_fusion_supernet(ws, cfg)
        train, val = _load(ws, "train"), _load(ws, "val")
        d = ws.new_stage(cfg, "finetune", "fusion")
        genome = net.check_genome(genome)
        before = fitness_fusion(genome, net, val)
        c = cfg["fusion"]
        train_fusion_supernet(net, train, ft["epochs"], rng, lr=c["lr"] * ft["lr_scale"], betas=betas,
                              batch_size=c["batch_size"], fixed_genome=genome,
                              checkpoint_dir=d / "checkpoints", seed=cfg["seed"])
        after = fitness_fusion(genome, net, val)
        name = "fusion_ssim"
    (d / "genome.txt").write_text(serialize(genome) + "\n")
    ws.metrics(d, [("val", f"{name}/pre_finetune", before), ("val", f"{name}/post_finetune", after)])
    print(f"{serialize(genome)}: val SSIM {before:.4f} -> {after:.4f} (from {ck})")


def _check_embedder(embedder_path):
    path = Path(embedder_path)
    if not path.exists():
        raise ConfigError(
            f"FID needs a pretrained image-embedding network; {path} does not exist. "
            "Supply a TorchScript module mapping (N,3,h,w) images in [0,1] to (N,d) features."
        )
    return path


def _fid(embedder_path, real, fake):
    from scipy import linalg

    emb = torch.jit.load(str(_check_embedder(embedder_path)), map_location="cpu").eval()
    with torch.no_grad():
        a, b = emb(real).double().numpy(), emb(fake).double().numpy()
    mu1, mu2 = a.mean(0), b.mean(0)
    s1, s2 = np.cov(a, rowvar=False), np.cov(b, rowvar=False)
    covmean = linalg.sqrtm(s1 @ s2).real
    return float(((mu1 - mu2) ** 2).sum() + np.trace(s1 + s2 - 2 * covmean))


def cmd_eval(args, cfg, ws):
    from .pipeline import TryOnModels, run_tryon
    from .synthdata import WARP_KEYS, batches, collate

    if args.fid_embedder:
        _check_embedder(args.fid_embedder)
    man = _check_data_resolution(ws, cfg)
    if args.split == "test":
        overlap = set(man["ids"].get("test", ())) & set(man["ids"].get("val", ()))
        if overlap:
            raise ConfigError(f"test and validation splits share {len(overlap)} samples")
    test = _load(ws, args.split)
    d = ws.new_stage(cfg, "eval", args.split)
    rows = []
    warp_nets = {}
    supernet = None
    for cat in CATEGORIES:
        if not ws.stage("search_warp", cat.value).is_dir():
            log.warning("no searched warping genome for %s; skipped", cat.value)
            continue
        net, genome, _ = warp_model_for(ws, cfg, cat)
        warp_nets[cat.value] = (net, genome)
        subset = [s for s in test if s.category == cat]
        if subset:
            if supernet is None:
                supernet = load_warp_supernet(ws, cfg)[0]
            rows.append((args.split, f"warp_ssim/{cat.value}", fitness_warp(genome, net, subset)))
            rows.append((args.split, f"warp_ssim_supernet_weights/{cat.value}", fitness_warp(genome, supernet, subset)))
            rows.append((args.split, f"warp_baseline_ssim/{cat.value}",
                         fitness_warp(BASELINE_WARP_GENOME, supernet, subset)))
    if not warp_nets:
        raise MissingStageError("search-warp", "run `tryon-nas search-warp --category <c>` for at least one category")

    if ws.stage("search_fusion").is_dir() and ws.stage("ppp").is_dir():
        fnet, fgenome, _ = fusion_model(ws, cfg)
        models = TryOnModels(load_ppp(ws, cfg), warp_nets, (fnet, fgenome))
        reals, fakes = [], []
        for cat in warp_nets:
            subset = [s for s in test if s.category.value == cat]
            for chunk in batches(subset, 16):
                out = run_tryon(models, chunk, chunk)
                real = collate(chunk, ("person",))["person"]
                reals.append(real)
                fakes.append(out["final"])
        real, fake = torch.cat(reals), torch.cat(fakes)
        rows.append((args.split, "tryon_ssim", float(ssim_per_image(fake, real).mean())))
        if args.fid_embedder:
            rows.append((args.split, "tryon_fid", _fid(args.fid_embedder, real, fake)))
    else:
        log.warning("PPP or fusion search missing; end-to-end try-on SSIM not reported")
        if args.fid_embedder:
            raise MissingStageError("search-fusion", "FID needs the full try-on pipeline")
    ws.metrics(d, rows)
    for _, m, v in rows:
        print(f"{m}\t{v:.4f}")


def _find_sample(ws, ident):
    """A sample id from the dataset, or a path to its ``.npz`` file."""
    from .synthdata import load_sample

    p = Path(ident)
    if p.suffix == ".npz" and p.exists():
        rec = json.loads(p.with_suffix(".json").read_text())
        return load_sample(p, rec)
    for rec_path in ws.data.glob(f"*/*/{ident}.json"):
        rec = json.loads(rec_path.read_text())
        return load_sample(rec_path.with_suffix(".npz"), rec)
    raise ConfigError(f"sample {ident!r} not found under {ws.data}")


def cmd_tryon(args, cfg, ws):
    from PIL import Image

    from .pipeline import TryOnModels, run_tryon, to_uint8_image

    person, garment = _find_sample(ws, args.person), _find_sample(ws, args.garment)
    cat = garment.category.value
    net, genome, _ = warp_model_for(ws, cfg, cat)
    fnet, fgenome, _ = fusion_model(ws, cfg)
    models = TryOnModels(load_ppp(ws, cfg), {cat: (net, genome)}, (fnet, fgenome))
    d = ws.new_stage(cfg, "tryon", f"{person.sample_id}__{garment.sample_id}")
    out = run_tryon(models, [person], [garment])
    images = {
        "person": torch.from_numpy(person.person), "garment": torch.from_numpy(garment.garment),
        "warped_garment": out["warped_garment"][0], "fusion_mask": out["fusion_mask"][0],
        "coarse": out["coarse"][0], "final": out["final"][0],
        "target_mask": out["target_mask"][0],
    }
    for name, t in images.items():
        Image.fromarray(to_uint8_image(t)).save(d / f"{name}.png")
    _write_json(d / "tryon.json", {"person": person.sample_id, "garment": garment.sample_id,
                                   "category": cat, "warp_genome": serialize(genome),
                                   "fusion_genome": serialize(fgenome)})
    print(d)


def cmd_report(args, cfg, ws):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if not ws.run.is_dir():
        raise MissingStageError("any", f"run {ws.run_id!r} has no stages under {ws.run}")
    out = Path(args.out) if args.out else ws.stage("report")
    if out.exists():
        raise ConfigError(f"{out} already exists; pass --out to write the report elsewhere")
    out.mkdir(parents=True)

    rows = []
    for p in sorted(ws.run.rglob("metrics.csv")):
        if out in p.parents:
            continue
        for r in read_metric_rows(p):
            rows.append({**r, "stage": str(p.parent.relative_to(ws.run))})
    with open(out / "metrics_table.md", "w") as f:
        f.write("| stage | split | metric | value |\n|---|---|---|---|\n")
        for r in rows:
            f.write(f"| {r['stage']} | {r['split']} | {r['metric']} | {float(r['value']):.4f} |\n")

    written = ["metrics_table.md"]
    for name, keys in (("ppp", ("g_loss", "d_loss", "pixel_ce")), ("warp_supernet", ("step_loss",)),
                       ("fusion_supernet", ("step_loss",))):
        hp = ws.stage(name, "history.json")
        if not hp.exists():
            continue
        hist = json.loads(hp.read_text())
        fig, ax = plt.subplots(figsize=(6, 3.5))
        for k in keys:
            y = np.asarray(hist.get(k, []), float)
            if len(y):
                win = max(1, len(y) // 50)
                ax.plot(np.convolve(y, np.ones(win) / win, mode="valid"), label=k)
        ax.set_xlabel("step")
        ax.set_title(f"{name} training loss")
        ax.legend()
        fig.tight_layout()
        fig.savefig(out / f"loss_{name}.png", dpi=100)
        plt.close(fig)
        written.append(f"loss_{name}.png")

    records = sorted(ws.run.glob("search_warp/*/search_record.jsonl")) + sorted(ws.run.glob("search_fusion/search_record.jsonl"))
    if records:
        fig, ax = plt.subplots(figsize=(6, 3.5))
        for p in records:
            rec = SearchRecord.read(p)
            label = p.parent.name
            ax.plot([f for _, f in rec.best], label=f"{label} best")
            ax.plot([np.mean([f for _, f in g]) for g in rec.generations], "--", alpha=0.5, label=f"{label} mean")
        ax.set_xlabel("generation")
        ax.set_ylabel("SSIM fitness")
        ax.legend(fontsize=6)
        fig.tight_layout()
        fig.savefig(out / "search_fitness.png", dpi=100)
        plt.close(fig)
        written.append("search_fitness.png")
    for w in written:
        print(out / w)


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train-ppp": cmd_train_ppp,
    "train-warp": cmd_train_warp,
    "train-fusion": cmd_train_fusion,
    "search-warp": cmd_search_warp,
    "search-fusion": cmd_search_fusion,
    "finetune": cmd_finetune,
    "eval": cmd_eval,
    "tryon": cmd_tryon,
    "report": cmd_report,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workdir", default="work", help="workspace root (default: ./work)")
    common.add_argument("--run-id", default="main", help="run name under <workdir>/runs")
    common.add_argument("--data", help="dataset directory (default: <workdir>/data)")
    common.add_argument("--config", help="YAML config file")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config value, e.g. --set warp.epochs=5 (repeatable)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="tryon-nas", description="Searchable virtual try-on pipeline")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("gen-data", parents=[common], help="generate the synthetic dataset")
    sub.add_parser("train-ppp", parents=[common], help="train the partial parsing network")
    sub.add_parser("train-warp", parents=[common], help="train the warping supernet")
    sub.add_parser("train-fusion", parents=[common], help="train the fusion supernet")
    s = sub.add_parser("search-warp", parents=[common], help="evolutionary search for one category")
    s.add_argument("--category", required=True, choices=[c.value for c in CATEGORIES])
    sub.add_parser("search-fusion", parents=[common], help="evolutionary search for the fusion net")
    s = sub.add_parser("finetune", parents=[common], help="fine-tune one searched genome")
    s.add_argument("--genome", required=True, help="file holding a genome in text form")
    s.add_argument("--category", choices=[c.value for c in CATEGORIES])
    s = sub.add_parser("eval", parents=[common], help="evaluate searched networks")
    s.add_argument("--split", default="test", choices=["val", "test"])
    s.add_argument("--fid-embedder", help="TorchScript image embedder for FID (not bundled)")
    s = sub.add_parser("tryon", parents=[common], help="run the full pipeline on one pair")
    s.add_argument("--person", required=True, help="sample id or .npz path providing the person")
    s.add_argument("--garment", required=True, help="sample id or .npz path providing the garment")
    s = sub.add_parser("report", parents=[common], help="metric tables and curve plots")
    s.add_argument("--out", help="output directory (default: <run>/report)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_mod.load_config(args.config, args.overrides)
        ws = Workspace(args.workdir, args.run_id, args.data)
        COMMANDS[args.command](args, cfg, ws)
    except TryOnError as e:
        print(f"error[{e.code}]: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
