"""End-to-end smoke run of every subcommand on a tiny workspace."""

import csv

import pytest

from tryon_nas.cli import main
from tryon_nas.search_space import parse, parse_warp

TINY = ["--set", "resolution=[64,48]", "--set", "data.train_per_category=4",
        "--set", "data.val_per_category=2", "--set", "data.test_per_category=2",
        "--set", "ppp.epochs=1", "--set", "ppp.width=8", "--set", "warp.epochs=1",
        "--set", "fusion.epochs=1", "--set", "fusion.base_width=8",
        "--set", "search.max_iterations=2", "--set", "search.population=6",
        "--set", "search.crossover_count=2", "--set", "search.mutation_count=2",
        "--set", "search.elitism_k=2", "--set", "finetune.epochs=1"]


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("ws")
    args = ["--workdir", str(root)] + TINY
    for cmd in (["gen-data"], ["train-ppp"], ["train-warp"], ["train-fusion"],
                ["search-warp", "--category", "long_sleeve"], ["search-warp", "--category", "pants"],
                ["search-fusion"]):
        assert main(cmd + args) == 0, cmd
    return root, args


def rows(path):
    with open(path) as f:
        return list(csv.DictReader(f))


def test_stage_outputs(workspace):
    root, _ = workspace
    run = root / "runs" / "main"
    for stage in ("ppp", "warp_supernet", "fusion_supernet", "search_warp/long_sleeve", "search_fusion"):
        assert (run / stage / "config.yaml").exists(), stage
    best = (run / "search_warp" / "long_sleeve" / "best_genome.txt").read_text()
    parse_warp(best)
    assert (run / "search_warp" / "long_sleeve" / "search_record.jsonl").exists()
    assert (run / "warp_supernet" / "checkpoints" / "epoch_1.pt").exists()
    names = {r["metric"] for r in rows(run / "search_warp" / "long_sleeve" / "metrics.csv")}
    assert {"warp_search_best_ssim/long_sleeve", "warp_baseline_ssim/long_sleeve"} <= names


def test_append_only_and_missing_stage(workspace, tmp_path, capsys):
    root, args = workspace
    assert main(["train-warp"] + args) == 2
    assert "append-only" in capsys.readouterr().err
    assert main(["search-warp", "--category", "skirt", "--run-id", "other"] + args) == 2
    err = capsys.readouterr().err
    assert "error[missing-stage]" in err and "train-warp" in err
    assert main(["train-ppp", "--workdir", str(tmp_path)] + TINY) == 2
    assert "gen-data" in capsys.readouterr().err


def test_bad_config_flag(workspace, capsys):
    root, args = workspace
    assert main(["train-warp", "--run-id", "x", "--set", "warp.nope=1"] + args) == 2
    assert "error[config]" in capsys.readouterr().err


def test_finetune_eval_tryon_report(workspace):
    root, args = workspace
    run = root / "runs" / "main"
    genome_file = run / "search_warp" / "long_sleeve" / "best_genome.txt"
    assert main(["finetune", "--genome", str(genome_file), "--category", "long_sleeve"] + args) == 0
    ft = rows(run / "finetune" / "warp_long_sleeve" / "metrics.csv")
    assert {r["metric"] for r in ft} == {"warp_ssim/long_sleeve/pre_finetune", "warp_ssim/long_sleeve/post_finetune"}

    assert main(["eval", "--split", "test"] + args) == 0
    ev = {r["metric"]: float(r["value"]) for r in rows(run / "eval" / "test" / "metrics.csv")}
    assert {"warp_ssim/long_sleeve", "warp_ssim/pants", "tryon_ssim"} <= set(ev)
    assert all(r["split"] == "test" for r in rows(run / "eval" / "test" / "metrics.csv"))

    pants = sorted((root / "data" / "test" / "pants").glob("*.json"))
    person, garment = pants[0].stem, pants[1].stem
    assert main(["tryon", "--person", person, "--garment", garment] + args) == 0
    out = run / "tryon" / f"{person}__{garment}"
    for name in ("warped_garment", "fusion_mask", "coarse", "final"):
        assert (out / f"{name}.png").exists()

    assert main(["report"] + args) == 0
    rep = run / "report"
    assert (rep / "metrics_table.md").exists() and (rep / "search_fitness.png").exists()
    assert (rep / "loss_warp_supernet.png").exists()


def test_fid_hook_errors_without_embedder(workspace, capsys):
    root, args = workspace
    assert main(["eval", "--split", "val", "--run-id", "main", "--fid-embedder", "/no/such.pt"] + args) == 2
    assert "pretrained" in capsys.readouterr().err


def test_search_record_genomes_parse(workspace):
    import json

    root, _ = workspace
    lines = (root / "runs" / "main" / "search_fusion" / "search_record.jsonl").read_text().splitlines()
    gen = json.loads(lines[1])
    for g, f in gen["members"]:
        parse(g)
    assert not (root / "runs" / "main" / "eval" / "val").exists()
