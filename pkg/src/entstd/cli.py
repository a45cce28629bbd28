"""Command-line interface wiring corpora, training, indexing, and evaluation.

Every command reads an optional key=value config file; explicit flags
override file values, and the effective configuration is echoed into the
output directory for provenance. All randomness flows from --seed, so a
rerun with the same config and seed reproduces the same artifacts byte for
byte (timing output excepted).

Exit codes: 0 success, 1 usage error, 2 data error (malformed or missing
inputs), 3 runtime error. The provider token is only ever read from the
ENTSTD_PROVIDER_TOKEN environment variable, never from a flag.
"""

from __future__ import annotations

import os
import sys
from pathlib import Path

import click

from . import plots
from .checkpoint import load_checkpoint, save_checkpoint
from .corpus import PERTURBATION_OPS, SynthesisConfig, load_corpus, save_corpus, synthesize_corpus
from .encoder import encode_batch, init_params
from .errors import DataError, EntstdError
from .evaluation import (
    benchmark_inference,
    roc_curve,
    topk_accuracy,
    write_eval_report,
    write_roc_points_tsv,
    write_roc_report,
)
from .index import build_index, indexed_surfaces, load_index, save_index
from .index import query as index_query
from .provider import ProviderConfig, fetch_embeddings
from .trainer import TrainConfig, cross_validate, write_history
from .trainer import train as run_training

PROVIDER_TOKEN_ENV = "ENTSTD_PROVIDER_TOKEN"

_DEFAULTS = {
    "seed": 0,
    "margin": 2.0,
    "lr": 1e-2,
    "group_size": 10,
    "groups_per_batch": 16,
    "epochs": 80,
    "strategy": "hybrid",
    "switch_epoch": None,
    "metric": "cosine",
    "index_mode": "canonical",
    "topk": 5,
    "optimizer": "adam",
    "feature_dim": 16384,
    "out_dim": 128,
    "ngram_lo": 2,
    "ngram_hi": 4,
    "val_every": 0,
    "n_entities": 30,
    "mentions_per_entity": 10,
    "repeats": 10,
    "folds": 5,
    "thresholds": 201,
    "tpr": "strict",
    "provider_endpoint": None,
    "provider_cache": "provider-cache.bin",
    "kb": None,
    "train": None,
    "test": None,
    "negatives": None,
    "checkpoint": None,
    "index": None,
    "out": None,
}

_INT_KEYS = {
    "seed", "group_size", "groups_per_batch", "epochs", "switch_epoch", "topk",
    "feature_dim", "out_dim", "ngram_lo", "ngram_hi", "val_every", "n_entities",
    "mentions_per_entity", "repeats", "folds", "thresholds",
}
_FLOAT_KEYS = {"margin", "lr"}


def _parse_config_file(path: Path) -> dict:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise DataError(f"{path}:{lineno}: expected 'key = value'")
            key, _, raw = stripped.partition("=")
            key = key.strip().replace("-", "_")
            raw = raw.strip()
            if key not in _DEFAULTS:
                raise DataError(f"{path}:{lineno}: unknown config key {key!r}")
            if raw.lower() in ("none", ""):
                values[key] = None
            elif key in _INT_KEYS:
                values[key] = int(raw)
            elif key in _FLOAT_KEYS:
                values[key] = float(raw)
            else:
                values[key] = raw
    return values


def _settings(config: str | None, **flags) -> dict:
    merged = dict(_DEFAULTS)
    if config:
        path = Path(config)
        if not path.exists():
            raise DataError(f"missing config file: {path}")
        merged.update(_parse_config_file(path))
    for key, value in flags.items():
        if value is not None:
            merged[key] = value
    return merged


def _echo_config(settings: dict, out_dir: Path, extra: dict | None = None) -> None:
    entries = dict(settings)
    if extra:
        entries.update(extra)
    lines = [f"{key} = {entries[key]}" for key in sorted(entries)]
    (out_dir / "config.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _out_dir(settings: dict) -> Path:
    out = settings.get("out")
    if not out:
        raise click.UsageError("--out directory is required")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _require_file(path, what: str) -> Path:
    if path is None:
        raise click.UsageError(f"missing required {what}")
    p = Path(path)
    if not p.exists():
        raise DataError(f"missing {what}: {p}")
    return p


def _load_corpus(settings: dict):
    return load_corpus(
        _require_file(settings["kb"], "knowledge-base file (--kb)"),
        _require_file(settings["train"], "train split (--train)"),
        _require_file(settings["test"], "test split (--test)"),
    )


def _train_config(settings: dict) -> TrainConfig:
    return TrainConfig(
        margin=settings["margin"],
        learning_rate=settings["lr"],
        g=settings["group_size"],
        b=settings["groups_per_batch"],
        epochs=settings["epochs"],
        strategy=settings["strategy"],
        switch_epoch=settings["switch_epoch"],
        metric=settings["metric"],
        seed=settings["seed"],
        optimizer=settings["optimizer"],
    )


def _make_encoder(settings: dict):
    """Batch-encode callable from a checkpoint or a remote provider."""
    if settings.get("provider_endpoint"):
        cfg = ProviderConfig(
            endpoint=settings["provider_endpoint"],
            auth_token=os.environ.get(PROVIDER_TOKEN_ENV, ""),
            cache_path=settings["provider_cache"],
        )
        return lambda texts: fetch_embeddings(cfg, texts)
    params = load_checkpoint(_require_file(settings.get("checkpoint"), "checkpoint (--checkpoint)"))
    return lambda texts: encode_batch(params, texts)


def _opt(*args, **kwargs):
    kwargs.setdefault("default", None)
    return click.option(*args, **kwargs)


def _corpus_options(f):
    f = _opt("--kb", help="knowledge-base JSONL file")(f)
    f = _opt("--train", help="train split JSONL file")(f)
    f = _opt("--test", help="test split JSONL file")(f)
    return f


def _train_options(f):
    f = _opt("--margin", type=float)(f)
    f = _opt("--lr", type=float, help="learning rate")(f)
    f = _opt("--group-size", type=int, help="samples per contrastive group (g)")(f)
    f = _opt("--groups-per-batch", type=int, help="groups per batch (b)")(f)
    f = _opt("--epochs", type=int)(f)
    f = _opt("--strategy", type=click.Choice(["batch-all", "batch-hard", "hybrid"]))(f)
    f = _opt("--switch-epoch", type=int, help="hybrid switch epoch (default: epochs/2)")(f)
    f = _opt("--metric", type=click.Choice(["cosine", "euclidean", "sqeuclidean"]))(f)
    f = _opt("--optimizer", type=click.Choice(["adam", "sgd"]))(f)
    f = _opt("--feature-dim", type=int)(f)
    f = _opt("--out-dim", type=int)(f)
    f = _opt("--ngram-lo", type=int)(f)
    f = _opt("--ngram-hi", type=int)(f)
    return f


def _common_options(f):
    f = _opt("--config", help="key=value config file; flags override it")(f)
    f = _opt("--seed", type=int)(f)
    return f


def _provider_options(f):
    f = _opt("--provider-endpoint", help="remote embedding provider URL")(f)
    f = _opt("--provider-cache", help="embedding cache file path")(f)
    return f


@click.group()
@click.version_option(package_name="entstd")
def cli():
    """Entity standardization: train, index, retrieve, evaluate."""


@cli.command()
@_common_options
@_opt("--n-entities", type=int)
@_opt("--mentions-per-entity", type=int)
@_opt("--ops", multiple=True, type=click.Choice(PERTURBATION_OPS), help="perturbation ops (repeatable)")
@_opt("--out", help="output directory")
def synth(config, seed, n_entities, mentions_per_entity, ops, out):
    """Generate a synthetic corpus (kb/train/test JSONL files)."""
    settings = _settings(config, seed=seed, n_entities=n_entities,
                         mentions_per_entity=mentions_per_entity, out=out)
    out_dir = _out_dir(settings)
    cfg = SynthesisConfig(
        n_entities=settings["n_entities"],
        mentions_per_entity=settings["mentions_per_entity"],
        ops=tuple(ops) if ops else PERTURBATION_OPS,
        seed=settings["seed"],
    )
    corpus = synthesize_corpus(cfg)
    save_corpus(corpus, out_dir / "kb.jsonl", out_dir / "train.jsonl", out_dir / "test.jsonl")
    _echo_config(settings, out_dir, {"ops": ",".join(cfg.ops)})
    click.echo(
        f"wrote {len(corpus.entities)} entities, {len(corpus.train)} train / "
        f"{len(corpus.test)} test mentions to {out_dir}"
    )


@cli.command(name="train")
@_common_options
@_corpus_options
@_train_options
@_opt("--val-every", type=int, help="record validation top-1 every N epochs")
@_opt("--out", help="output directory")
def cmd_train(config, seed, kb, train, test, val_every, out, **train_flags):
    """Train the encoder; writes checkpoint, history, and config echo."""
    settings = _settings(config, seed=seed, kb=kb, train=train, test=test,
                         val_every=val_every, out=out, **train_flags)
    out_dir = _out_dir(settings)
    corpus = _load_corpus(settings)
    cfg = _train_config(settings)
    init = init_params(
        feature_dim=settings["feature_dim"],
        ngram_range=(settings["ngram_lo"], settings["ngram_hi"]),
        out_dim=settings["out_dim"],
        seed=settings["seed"],
    )
    params, history = run_training(corpus, cfg, init, val_every=settings["val_every"])
    save_checkpoint(params, out_dir / "checkpoint.bin")
    write_history(history, out_dir / "history.jsonl")
    plots.plot_history(history, out_dir / "history.png")
    _echo_config(settings, out_dir)
    final = history.records[-1].mean_loss if history.records else float("nan")
    click.echo(f"trained {cfg.epochs} epochs; final mean batch loss {final:.6f}")
    click.echo(f"artifacts in {out_dir}: checkpoint.bin history.jsonl history.png config.txt")


@cli.command(name="index")
@_common_options
@_corpus_options
@_opt("--checkpoint", help="encoder checkpoint file")
@_opt("--index-mode", type=click.Choice(["canonical", "extended"]))
@_opt("--metric", type=click.Choice(["cosine", "euclidean", "sqeuclidean"]))
@_provider_options
@_opt("--out", help="output directory")
def cmd_index(config, seed, kb, train, test, checkpoint, index_mode, metric, provider_endpoint, provider_cache, out):
    """Precompute the entity-embedding index from a corpus and encoder."""
    settings = _settings(config, seed=seed, kb=kb, train=train, test=test,
                         checkpoint=checkpoint, index_mode=index_mode, metric=metric,
                         provider_endpoint=provider_endpoint, provider_cache=provider_cache, out=out)
    out_dir = _out_dir(settings)
    corpus = _load_corpus(settings)
    encoder = _make_encoder(settings)
    surfaces = indexed_surfaces(corpus, settings["index_mode"])
    vectors = encoder([s for _, s in surfaces])
    idx = build_index(vectors, corpus, settings["index_mode"], settings["metric"])
    save_index(idx, out_dir / "index.bin")
    _echo_config(settings, out_dir)
    click.echo(f"indexed {idx.n_rows} rows ({idx.distinct_entities()} entities) -> {out_dir / 'index.bin'}")


@cli.command(name="query")
@_common_options
@_opt("--index", "index_path", help="index file")
@_opt("--checkpoint", help="encoder checkpoint file")
@_opt("--topk", type=int)
@_provider_options
@click.argument("mentions", nargs=-1)
def cmd_query(config, seed, index_path, checkpoint, topk, provider_endpoint, provider_cache, mentions):
    """Retrieve top-k entities for mentions (arguments or stdin, one per line)."""
    settings = _settings(config, seed=seed, index=index_path, checkpoint=checkpoint,
                         topk=topk, provider_endpoint=provider_endpoint,
                         provider_cache=provider_cache)
    idx = load_index(_require_file(settings.get("index"), "index (--index)"))
    encoder = _make_encoder(settings)
    surfaces = list(mentions) if mentions else [line.strip() for line in sys.stdin if line.strip()]
    if not surfaces:
        raise click.UsageError("no mentions given (pass as arguments or on stdin)")
    embeddings = encoder(surfaces)
    for surface, emb in zip(surfaces, embeddings):
        for rank, (eid, dist) in enumerate(index_query(idx, emb, settings["topk"]), start=1):
            click.echo(f"{surface}\t{rank}\t{eid}\t{dist:.6f}")


@cli.command(name="eval")
@_common_options
@_corpus_options
@_opt("--index", "index_path", help="index file")
@_opt("--checkpoint", help="encoder checkpoint file")
@_provider_options
@_opt("--out", help="output directory")
def cmd_eval(config, seed, kb, train, test, index_path, checkpoint, provider_endpoint, provider_cache, out):
    """Top-1/3/5 retrieval accuracy of the test split; writes report + figure."""
    settings = _settings(config, seed=seed, kb=kb, train=train, test=test, index=index_path,
                         checkpoint=checkpoint, provider_endpoint=provider_endpoint,
                         provider_cache=provider_cache, out=out)
    out_dir = _out_dir(settings)
    corpus = _load_corpus(settings)
    idx = load_index(_require_file(settings.get("index"), "index (--index)"))
    encoder = _make_encoder(settings)
    report = topk_accuracy(idx, encoder, corpus.test)
    write_eval_report(report, out_dir / "eval_report.jsonl")
    plots.plot_topk(report, out_dir / "topk.png")
    _echo_config(settings, out_dir)
    for k in sorted(report.top_k):
        click.echo(f"T@{k}: {report.top_k[k]:.4f}")


@cli.command(name="roc")
@_common_options
@_corpus_options
@_opt("--index", "index_path", help="index file")
@_opt("--checkpoint", help="encoder checkpoint file")
@_opt("--negatives", help="out-of-KB surfaces, one per line")
@_opt("--thresholds", type=int, help="number of thresholds in the sweep")
@_opt("--tpr", type=click.Choice(["strict", "acceptance"]), help="true-positive definition")
@_provider_options
@_opt("--out", help="output directory")
def cmd_roc(config, seed, kb, train, test, index_path, checkpoint, negatives, thresholds,
            tpr, provider_endpoint, provider_cache, out):
    """ROC curve of test mentions against unseen negative surfaces."""
    settings = _settings(config, seed=seed, kb=kb, train=train, test=test, index=index_path,
                         checkpoint=checkpoint, negatives=negatives, thresholds=thresholds,
                         tpr=tpr, provider_endpoint=provider_endpoint,
                         provider_cache=provider_cache, out=out)
    out_dir = _out_dir(settings)
    corpus = _load_corpus(settings)
    idx = load_index(_require_file(settings.get("index"), "index (--index)"))
    neg_path = _require_file(settings.get("negatives"), "negatives file (--negatives)")
    neg_surfaces = [line.strip() for line in neg_path.read_text(encoding="utf-8").splitlines() if line.strip()]
    encoder = _make_encoder(settings)
    report = roc_curve(
        idx, encoder, corpus.test, neg_surfaces,
        n_thresholds=settings["thresholds"],
        strict_tpr=settings["tpr"] == "strict",
    )
    write_roc_report(report, out_dir / "roc.jsonl")
    write_roc_points_tsv(report, out_dir / "roc_points.tsv")
    plots.plot_roc(report, out_dir / "roc.png")
    _echo_config(settings, out_dir)
    click.echo(f"AUC: {report.auc:.4f} over {len(report.points)} thresholds")


@cli.command(name="bench")
@_common_options
@_corpus_options
@_opt("--index", "index_path", help="index file")
@_opt("--checkpoint", help="encoder checkpoint file")
@_opt("--repeats", type=int)
@_provider_options
def cmd_bench(config, seed, kb, train, test, index_path, checkpoint, repeats, provider_endpoint, provider_cache):
    """Median inference time over repeated full-test-set runs."""
    settings = _settings(config, seed=seed, kb=kb, train=train, test=test, index=index_path,
                         checkpoint=checkpoint, repeats=repeats,
                         provider_endpoint=provider_endpoint, provider_cache=provider_cache)
    corpus = _load_corpus(settings)
    idx = load_index(_require_file(settings.get("index"), "index (--index)"))
    encoder = _make_encoder(settings)
    med, runs = benchmark_inference(idx, encoder, corpus.test, repeats=settings["repeats"])
    click.echo(f"median: {med:.4f} s over {len(runs)} runs ({len(corpus.test)} mentions)")
    click.echo("runs: " + " ".join(f"{r:.4f}" for r in runs))


@cli.command(name="cv")
@_common_options
@_corpus_options
@_train_options
@_opt("--folds", type=int)
@_opt("--out", help="optional output directory for report + figure")
def cmd_cv(config, seed, kb, train, test, folds, out, **train_flags):
    """k-fold cross-validation of held-out top-1 accuracy on the train split."""
    settings = _settings(config, seed=seed, kb=kb, train=train, test=test,
                         folds=folds, out=out, **train_flags)
    corpus = _load_corpus(settings)
    cfg = _train_config(settings)
    init = init_params(
        feature_dim=settings["feature_dim"],
        ngram_range=(settings["ngram_lo"], settings["ngram_hi"]),
        out_dim=settings["out_dim"],
        seed=settings["seed"],
    )
    report = cross_validate(corpus, cfg, settings["folds"], init)
    for i, acc in enumerate(report.per_fold, start=1):
        click.echo(f"fold {i}: {acc:.4f}")
    click.echo(f"mean: {report.mean:.4f}  std: {report.std:.4f}")
    if settings.get("out"):
        out_dir = _out_dir(settings)
        import json

        with open(out_dir / "cv.jsonl", "w", encoding="utf-8") as fh:
            fh.write(json.dumps({"per_fold": list(report.per_fold), "mean": report.mean,
                                 "std": report.std}) + "\n")
        plots.plot_cv(report, out_dir / "cv.png")
        _echo_config(settings, out_dir)


def main(argv: list[str] | None = None) -> int:
    """Entry point with the documented exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2
    except (EntstdError, ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 3


if __name__ == "__main__":
    sys.exit(main())
