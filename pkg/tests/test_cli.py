from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from embagg.cli import main
from embagg.experiment import load_experiment_config, run_experiment

from conftest import make_dataset_dir, make_separable_store, make_sentiment_rows


@pytest.fixture
def runner():
    return CliRunner()


def _first_json(output: str) -> dict:
    return json.loads(output.splitlines()[0])


def test_stats_outputs_json_and_table(runner, toy_dataset_dir):
    result = runner.invoke(main, ["stats", str(toy_dataset_dir), "--name", "toy"])
    assert result.exit_code == 0, result.output
    payload = _first_json(result.output)
    assert payload["n_train"] == 60 and payload["n_valid"] == 20 and payload["n_test"] == 20
    assert 0.0 <= payload["pos_fraction"] <= 1.0
    assert "mean/median len" in result.output


def test_stats_missing_split_emits_error_json(runner, tmp_path):
    d = make_dataset_dir(tmp_path / "d", [("a", 1)], [("a", 0)], [("a", 1)])
    (d / "test.csv").unlink()
    result = runner.invoke(main, ["stats", str(d)])
    assert result.exit_code == 1
    err_lines = [line for line in result.stderr.splitlines() if line.strip()]
    assert len(err_lines) == 1
    err = json.loads(err_lines[0])
    assert err["error"] == "MissingSplit" and err["split"] == "test"


def test_fit_tfidf_writes_vocab(runner, toy_dataset_dir, tmp_path):
    out = tmp_path / "vocab.tsv"
    result = runner.invoke(main, ["fit-tfidf", str(toy_dataset_dir), "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert out.exists()
    assert _first_json(result.output)["vocab_size"] > 0
    assert out.read_text(encoding="utf-8").startswith("n_docs=60")


def test_store_pipeline_inspect_aggregate_train_evaluate(runner, toy_dataset_dir, tmp_path):
    store_path = tmp_path / "toy.embs"
    result = runner.invoke(
        main,
        ["toy-store", "--dataset-dir", str(toy_dataset_dir), "--out", str(store_path), "--seed", "5",
         "--hidden-size", "8", "--positions", "10"],
    )
    assert result.exit_code == 0, result.output

    result = runner.invoke(main, ["store", "inspect", str(store_path)])
    assert result.exit_code == 0, result.output
    info = _first_json(result.output)
    assert info["count"] == 100 and info["hidden_size"] == 8 and info["warnings"] == []

    agg_path = tmp_path / "agg.embs"
    result = runner.invoke(
        main, ["aggregate", "--store", str(store_path), "--strategy", "first-mean-std", "--out", str(agg_path)]
    )
    assert result.exit_code == 0, result.output
    assert _first_json(result.output)["dim"] == 24

    config_path = tmp_path / "train.toml"
    config_path.write_text("base_lr = 0.3\nmax_epochs = 4\nbatch_size = 16\nseed = 3\nl2 = 0.0\n", encoding="utf-8")
    head_path = tmp_path / "head.bin"
    log_path = tmp_path / "log.jsonl"
    result = runner.invoke(
        main,
        ["train-head", "--input", "embeddings", "--dataset-dir", str(toy_dataset_dir),
         "--config", str(config_path), "--features", str(agg_path), "--out", str(head_path), "--log", str(log_path)],
    )
    assert result.exit_code == 0, result.output
    assert head_path.exists()
    log_lines = [json.loads(line) for line in log_path.read_text(encoding="utf-8").splitlines()]
    assert [e["epoch"] for e in log_lines] == [1, 2, 3, 4]
    assert all("valid_loss" in e and "train_loss" in e and "lr" in e for e in log_lines)

    result = runner.invoke(
        main,
        ["evaluate", "--head", str(head_path), "--input", "embeddings", "--dataset-dir", str(toy_dataset_dir),
         "--features", str(agg_path), "--split", "test"],
    )
    assert result.exit_code == 0, result.output
    report = _first_json(result.output)
    assert 0.0 <= report["roc_auc"] <= 1.0 and report["n"] == 20


def test_train_head_tfidf_input(runner, toy_dataset_dir, tmp_path):
    config_path = tmp_path / "train.toml"
    config_path.write_text("[train]\nbase_lr = 0.5\nmax_epochs = 2\nseed = 1\n", encoding="utf-8")
    head_path = tmp_path / "head.bin"
    result = runner.invoke(
        main,
        ["train-head", "--input", "tfidf", "--dataset-dir", str(toy_dataset_dir),
         "--config", str(config_path), "--out", str(head_path)],
    )
    assert result.exit_code == 0, result.output
    assert _first_json(result.output)["best_epoch"] in (1, 2)


def test_rank_from_matrix_csv(runner):
    fixture = Path(__file__).resolve().parent.parent / "fixtures" / "rank_fixture_rows.csv"
    result = runner.invoke(main, ["rank", "--matrix", str(fixture)])
    assert result.exit_code == 0, result.output
    table = _first_json(result.output)
    assert table["datasets"] == ["olist", "buscape", "b2w", "utlc-apps", "utlc-movies"]
    by_label = {row["label"]: row for row in table["rows"]}
    assert by_label["fine-tuned-own"]["avg_rank"] < by_label["pretrained"]["avg_rank"]


def test_rank_requires_exactly_one_source(runner):
    result = runner.invoke(main, ["rank"])
    assert result.exit_code == 1
    assert json.loads(result.stderr.splitlines()[0])["error"] == "ValueError"


def test_rank_over_empty_reports_dir(runner, tmp_path):
    empty = tmp_path / "nothing"
    empty.mkdir()
    result = runner.invoke(main, ["rank", "--reports", str(empty)])
    assert result.exit_code == 1
    assert json.loads(result.stderr.splitlines()[0])["error"] == "EmptyInput"


def test_missing_store_yields_error_json(runner, toy_dataset_dir, tmp_path):
    config = tmp_path / "exp.toml"
    config.write_text(
        f"""
name = "broken"
seed = 1
out_dir = "out"
[dataset]
path = "{toy_dataset_dir}"
name = "toy"
[representation]
kind = "embedding"
store = "does-not-exist.embs"
strategy = "first"
[train]
base_lr = 0.1
""",
        encoding="utf-8",
    )
    result = runner.invoke(main, ["run", "--config", str(config)])
    assert result.exit_code == 1
    err = json.loads(result.stderr.splitlines()[0])
    assert err["error"] in ("NotFound", "CorruptStore")


def _write_experiment_config(tmp_path, dataset_dir, store_path, strategy="first-mean-std", seed=7):
    config = tmp_path / "exp.toml"
    config.write_text(
        f"""
name = "toy-exp"
seed = {seed}
out_dir = "out"

[dataset]
path = "{dataset_dir}"
name = "toy"

[representation]
kind = "embedding"
store = "{store_path}"
strategy = "{strategy}"

[train]
base_lr = 0.3
max_epochs = 4
batch_size = 16
l2 = 0.0
""",
        encoding="utf-8",
    )
    return config


def test_run_experiment_writes_artifacts(runner, toy_dataset_dir, toy_dataset, tmp_path):
    store_path = tmp_path / "sep.embs"
    make_separable_store(store_path, toy_dataset)
    config = _write_experiment_config(tmp_path, toy_dataset_dir, store_path)
    result = runner.invoke(main, ["run", "--config", str(config)])
    assert result.exit_code == 0, result.output
    report = _first_json(result.output)
    assert report["dataset"] == "toy" and "roc_auc" in report
    out = tmp_path / "out" / "toy" / "first-mean-std"
    assert (out / "head.bin").exists()
    assert (out / "train_log.jsonl").exists()
    assert json.loads((out / "report.json").read_text(encoding="utf-8")) == report


def test_run_experiment_is_byte_deterministic(toy_dataset_dir, toy_dataset, tmp_path):
    store_path = tmp_path / "sep.embs"
    make_separable_store(store_path, toy_dataset)
    artifacts = []
    for sub in ("a", "b"):
        workdir = tmp_path / sub
        workdir.mkdir()
        config = _write_experiment_config(workdir, toy_dataset_dir, store_path)
        run_experiment(load_experiment_config(config))
        out = workdir / "out" / "toy" / "first-mean-std"
        artifacts.append((out / "report.json").read_bytes() + (out / "head.bin").read_bytes())
    assert artifacts[0] == artifacts[1]


def test_tfidf_run_smoke(runner, tmp_path):
    d = make_dataset_dir(
        tmp_path / "six",
        train=make_sentiment_rows(6, seed=5),
        valid=make_sentiment_rows(4, seed=6),
        test=make_sentiment_rows(4, seed=7),
    )
    config = tmp_path / "exp.toml"
    config.write_text(
        f"""
name = "tfidf-smoke"
seed = 1
out_dir = "out"
[dataset]
path = "{d}"
name = "six"
[representation]
kind = "tfidf"
[train]
base_lr = 0.5
max_epochs = 4
batch_size = 2
""",
        encoding="utf-8",
    )
    result = runner.invoke(main, ["run", "--config", str(config)])
    assert result.exit_code == 0, result.output
    assert "roc_auc" in _first_json(result.output)
    assert (tmp_path / "out" / "six" / "tfidf" / "vocab.tsv").exists()


def test_cross_eval_command(runner, tmp_path):
    from embagg import load_dataset

    dirs = {}
    stores = {}
    for name, seed in (("ta", 21), ("tb", 22)):
        d = make_dataset_dir(
            tmp_path / name,
            train=make_sentiment_rows(30, seed=seed),
            valid=make_sentiment_rows(10, seed=seed + 1),
            test=make_sentiment_rows(10, seed=seed + 2),
        )
        ds = load_dataset(d, name)
        store_path = tmp_path / f"{name}.embs"
        make_separable_store(store_path, ds, seed=seed)
        dirs[name], stores[name] = d, store_path

    # train one head per dataset through the CLI pipeline
    heads = {}
    for name in dirs:
        agg = tmp_path / f"{name}.agg.embs"
        assert runner.invoke(
            main, ["aggregate", "--store", str(stores[name]), "--strategy", "first-mean-std", "--out", str(agg)]
        ).exit_code == 0
        cfg = tmp_path / f"{name}.train.toml"
        cfg.write_text("base_lr = 0.3\nmax_epochs = 4\nbatch_size = 8\nl2 = 0.0\n", encoding="utf-8")
        head = tmp_path / f"{name}.head.bin"
        assert runner.invoke(
            main,
            ["train-head", "--input", "embeddings", "--dataset-dir", str(dirs[name]), "--config", str(cfg),
             "--features", str(agg), "--out", str(head)],
        ).exit_code == 0
        heads[name] = head

    cross_cfg = tmp_path / "cross.toml"
    cross_cfg.write_text(
        f"""
strategy = "first-mean-std"
seed = 0

[datasets.ta]
path = "{dirs['ta']}"
store = "{stores['ta']}"

[datasets.tb]
path = "{dirs['tb']}"
store = "{stores['tb']}"

[heads]
ta = "{heads['ta']}"
tb = "{heads['tb']}"

[pretrained]
base_lr = 0.3
max_epochs = 4
batch_size = 8
l2 = 0.0
""",
        encoding="utf-8",
    )
    result = runner.invoke(main, ["cross-eval", "--config", str(cross_cfg)])
    assert result.exit_code == 0, result.output
    matrix = _first_json(result.output)
    assert matrix["datasets"] == ["ta", "tb"]
    sources = [row["source"] for row in matrix["rows"]]
    assert sources == ["ta", "tb", "pretrained"]
    for row in matrix["rows"]:
        assert all(0.0 <= v <= 100.0 for v in row["roc_auc_pct"])


def test_rank_from_reports_dir(runner, toy_dataset_dir, toy_dataset, tmp_path):
    store_path = tmp_path / "sep.embs"
    make_separable_store(store_path, toy_dataset)
    # two strategies on the same dataset, sharing one out dir
    for strategy in ("first", "first-mean-std"):
        run_dir = tmp_path / strategy
        run_dir.mkdir()
        cfg = _write_experiment_config(run_dir, toy_dataset_dir, store_path, strategy=strategy)
        cfg.write_text(cfg.read_text(encoding="utf-8").replace('out_dir = "out"', f'out_dir = "{tmp_path / "out"}"'), encoding="utf-8")
        run_experiment(load_experiment_config(cfg))
    result = runner.invoke(main, ["rank", "--reports", str(tmp_path / "out")])
    assert result.exit_code == 0, result.output
    table = _first_json(result.output)
    assert len(table["rows"]) == 2
