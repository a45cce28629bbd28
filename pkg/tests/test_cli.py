"""CLI pipeline: command composition, artifacts, exit codes, reproducibility."""

from __future__ import annotations

import json

import pytest

from entstd.checkpoint import load_checkpoint
from entstd.cli import main
from entstd.encoder import init_params

FAST_TRAIN = [
    "--epochs", "6", "--group-size", "4", "--groups-per-batch", "4",
    "--feature-dim", "2048", "--out-dim", "32",
]


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("data")
    rc = main(["synth", "--seed", "2", "--n-entities", "12", "--mentions-per-entity", "6",
               "--out", str(root)])
    assert rc == 0
    return root


def _corpus_args(data_dir):
    return ["--kb", str(data_dir / "kb.jsonl"), "--train", str(data_dir / "train.jsonl"),
            "--test", str(data_dir / "test.jsonl")]


@pytest.fixture(scope="module")
def run_dir(data_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    rc = main(["train", *_corpus_args(data_dir), *FAST_TRAIN, "--out", str(out)])
    assert rc == 0
    rc = main(["index", *_corpus_args(data_dir), "--checkpoint", str(out / "checkpoint.bin"),
               "--out", str(out)])
    assert rc == 0
    return out


def test_synth_writes_three_dataset_files(data_dir):
    for name in ("kb.jsonl", "train.jsonl", "test.jsonl"):
        assert (data_dir / name).exists()


def test_train_writes_contract_artifacts(run_dir):
    for name in ("checkpoint.bin", "history.jsonl", "config.txt"):
        assert (run_dir / name).exists()
    assert (run_dir / "history.png").exists()  # figure alongside the data


def test_epochs_zero_checkpoint_equals_init(data_dir, tmp_path):
    rc = main(["train", *_corpus_args(data_dir), "--epochs", "0",
               "--feature-dim", "2048", "--out-dim", "32", "--seed", "3",
               "--out", str(tmp_path)])
    assert rc == 0
    saved = load_checkpoint(tmp_path / "checkpoint.bin")
    assert saved.equals(init_params(feature_dim=2048, ngram_range=(2, 4), out_dim=32, seed=3))
    assert (tmp_path / "history.jsonl").read_text() == ""


def test_rerun_byte_identical_artifacts(data_dir, tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        rc = main(["train", *_corpus_args(data_dir), *FAST_TRAIN, "--seed", "5",
                   "--out", str(out)])
        assert rc == 0
        outs.append(out)
    assert (outs[0] / "history.jsonl").read_bytes() == (outs[1] / "history.jsonl").read_bytes()
    assert (outs[0] / "checkpoint.bin").read_bytes() == (outs[1] / "checkpoint.bin").read_bytes()


def test_query_on_indexed_name_is_distance_zero(data_dir, run_dir, capsys):
    kb_line = json.loads((data_dir / "kb.jsonl").read_text().splitlines()[0])
    rc = main(["query", "--index", str(run_dir / "index.bin"),
               "--checkpoint", str(run_dir / "checkpoint.bin"),
               "--topk", "1", kb_line["name"]])
    assert rc == 0
    fields = capsys.readouterr().out.strip().split("\t")
    assert fields[0] == kb_line["name"]
    assert fields[2] == kb_line["id"]
    assert float(fields[3]) == pytest.approx(0.0, abs=1e-6)


def test_query_reads_stdin(run_dir, capsys, monkeypatch):
    import io

    monkeypatch.setattr("sys.stdin", io.StringIO("some mention\nanother one\n"))
    rc = main(["query", "--index", str(run_dir / "index.bin"),
               "--checkpoint", str(run_dir / "checkpoint.bin"), "--topk", "2"])
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 4  # two mentions x top-2


def test_eval_writes_report_and_figure(data_dir, run_dir, tmp_path, capsys):
    rc = main(["eval", *_corpus_args(data_dir), "--index", str(run_dir / "index.bin"),
               "--checkpoint", str(run_dir / "checkpoint.bin"), "--out", str(tmp_path)])
    assert rc == 0
    assert (tmp_path / "eval_report.jsonl").exists()
    assert (tmp_path / "topk.png").exists()
    summary = json.loads((tmp_path / "eval_report.jsonl").read_text().splitlines()[0])
    assert summary["top_k"]["1"] <= summary["top_k"]["3"] <= summary["top_k"]["5"]


def test_roc_writes_reports_and_figure(data_dir, run_dir, tmp_path):
    negatives = tmp_path / "negatives.txt"
    negatives.write_text("unrelated gizmo\nanother unknown thing\nzzz qqq\n")
    rc = main(["roc", *_corpus_args(data_dir), "--index", str(run_dir / "index.bin"),
               "--checkpoint", str(run_dir / "checkpoint.bin"),
               "--negatives", str(negatives), "--thresholds", "21", "--out", str(tmp_path)])
    assert rc == 0
    assert (tmp_path / "roc.jsonl").exists()
    assert (tmp_path / "roc_points.tsv").exists()
    assert (tmp_path / "roc.png").exists()
    rows = (tmp_path / "roc_points.tsv").read_text().strip().splitlines()
    assert len(rows) == 21


def test_bench_prints_runs(data_dir, run_dir, capsys):
    rc = main(["bench", *_corpus_args(data_dir), "--index", str(run_dir / "index.bin"),
               "--checkpoint", str(run_dir / "checkpoint.bin"), "--repeats", "2"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "median:" in out and "runs:" in out


def test_cv_prints_folds(data_dir, capsys):
    rc = main(["cv", *_corpus_args(data_dir), *FAST_TRAIN, "--epochs", "2", "--folds", "2"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "fold 1:" in out and "mean:" in out


def test_config_file_with_flag_override(data_dir, tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "epochs = 1\ngroup_size = 4\ngroups_per_batch = 4\nfeature_dim = 2048\n"
        "out_dim = 32\nseed = 9\n"
    )
    out = tmp_path / "out"
    rc = main(["train", *_corpus_args(data_dir), "--config", str(cfg),
               "--epochs", "2", "--out", str(out)])  # flag overrides file
    assert rc == 0
    history = (out / "history.jsonl").read_text().strip().splitlines()
    assert len(history) == 2
    echoed = (out / "config.txt").read_text()
    assert "epochs = 2" in echoed and "seed = 9" in echoed


def test_unknown_config_key_is_data_error(data_dir, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("warp_factor = 9\n")
    rc = main(["train", *_corpus_args(data_dir), "--config", str(cfg), "--out", str(tmp_path)])
    assert rc == 2


def test_missing_artifact_exit_code_names_file(data_dir, tmp_path, capsys):
    rc = main(["eval", *_corpus_args(data_dir), "--index", str(tmp_path / "absent.bin"),
               "--checkpoint", str(tmp_path / "nope.bin"), "--out", str(tmp_path)])
    assert rc == 2
    assert "absent.bin" in capsys.readouterr().err


def test_usage_error_exit_code():
    assert main(["train", "--no-such-flag"]) == 1


def test_corrupt_dataset_exit_code(tmp_path):
    (tmp_path / "kb.jsonl").write_text("not json\n")
    (tmp_path / "train.jsonl").write_text("")
    (tmp_path / "test.jsonl").write_text("")
    rc = main(["train", "--kb", str(tmp_path / "kb.jsonl"),
               "--train", str(tmp_path / "train.jsonl"),
               "--test", str(tmp_path / "test.jsonl"), "--out", str(tmp_path)])
    assert rc == 2


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert "train" in capsys.readouterr().out


@pytest.mark.slow
def test_full_pipeline_on_defaults_reaches_high_accuracy(tmp_path, capsys):
    # synth -> train -> index -> eval entirely at library defaults; only the
    # corpus seed is pinned.
    data = tmp_path / "data"
    out = tmp_path / "run"
    assert main(["synth", "--seed", "2", "--out", str(data)]) == 0
    corpus_args = ["--kb", str(data / "kb.jsonl"), "--train", str(data / "train.jsonl"),
                   "--test", str(data / "test.jsonl")]
    assert main(["train", *corpus_args, "--out", str(out)]) == 0
    assert main(["index", *corpus_args, "--checkpoint", str(out / "checkpoint.bin"),
                 "--out", str(out)]) == 0
    capsys.readouterr()
    assert main(["eval", *corpus_args, "--index", str(out / "index.bin"),
                 "--checkpoint", str(out / "checkpoint.bin"), "--out", str(out)]) == 0
    top1_line = [l for l in capsys.readouterr().out.splitlines() if l.startswith("T@1")][0]
    assert float(top1_line.split(":")[1]) >= 0.9
