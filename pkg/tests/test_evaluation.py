"""Top-k accuracy, ROC sweeps, and the inference benchmark."""

from __future__ import annotations

import numpy as np
import pytest

from entstd.corpus import MentionRecord
from entstd.encoder import encode_batch, init_params
from entstd.errors import DataError
from entstd.evaluation import (
    benchmark_inference,
    roc_curve,
    roc_from_scores,
    topk_accuracy,
    write_eval_report,
    write_roc_points_tsv,
    write_roc_report,
)
from entstd.index import build_index


@pytest.fixture
def small_setup(tiny_corpus):
    params = init_params(feature_dim=512, ngram_range=(2, 3), out_dim=16, seed=2)
    names = [e.canonical_name for e in tiny_corpus.entities]
    idx = build_index(encode_batch(params, names), tiny_corpus, "canonical", "cosine")
    encoder = lambda texts: encode_batch(params, texts)
    return tiny_corpus, idx, encoder


class TestTopk:
    def test_self_retrieval_is_perfect(self, small_setup):
        corpus, idx, encoder = small_setup
        as_mentions = [MentionRecord(e.canonical_name, e.id) for e in corpus.entities]
        report = topk_accuracy(idx, encoder, as_mentions)
        assert report.top_k[1] == 1.0

    def test_empty_test_is_error(self, small_setup):
        _, idx, encoder = small_setup
        with pytest.raises(DataError, match="empty test"):
            topk_accuracy(idx, encoder, [])

    def test_monotone_in_k(self, small_setup):
        corpus, idx, encoder = small_setup
        report = topk_accuracy(idx, encoder, corpus.test)
        assert report.top_k[1] <= report.top_k[3] <= report.top_k[5]
        assert report.n_test == len(corpus.test)

    def test_permutation_invariance(self, small_setup):
        corpus, idx, encoder = small_setup
        fwd = topk_accuracy(idx, encoder, corpus.test)
        rev = topk_accuracy(idx, encoder, list(corpus.test)[::-1])
        assert fwd.top_k == rev.top_k

    def test_records_carry_top5(self, small_setup):
        corpus, idx, encoder = small_setup
        report = topk_accuracy(idx, encoder, corpus.test)
        assert len(report.records) == len(corpus.test)
        for rec in report.records:
            assert 1 <= len(rec.predictions) <= 5
            dists = [d for _, d in rec.predictions]
            assert dists == sorted(dists)

    def test_report_export(self, small_setup, tmp_path):
        corpus, idx, encoder = small_setup
        report = topk_accuracy(idx, encoder, corpus.test)
        path = tmp_path / "report.jsonl"
        write_eval_report(report, path)
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 1 + len(corpus.test)


class TestRocFromScores:
    def test_thresholds_below_and_above(self):
        # positives at .1/.2 (both correct), negatives at .8/.9
        report = roc_from_scores([0.1, 0.2], [True, True], [0.8, 0.9], n_thresholds=9)
        t_min = report.points[0]
        assert t_min[1] == 0.0  # no negative accepted at the lowest threshold
        t_max = report.points[-1]
        assert t_max[1] == 1.0 and t_max[2] == 1.0

    def test_top_threshold_tpr_is_top1_accuracy(self):
        report = roc_from_scores([0.1, 0.2], [True, False], [0.5, 0.6], n_thresholds=5)
        assert report.points[-1][2] == 0.5

    def test_monotone_fpr_tpr(self, rng):
        pos = rng.uniform(0, 1, size=50)
        neg = rng.uniform(0, 1, size=50)
        report = roc_from_scores(pos, [True] * 50, neg, n_thresholds=31)
        fprs = [p[1] for p in report.points]
        tprs = [p[2] for p in report.points]
        assert fprs == sorted(fprs)
        assert tprs == sorted(tprs)
        assert 0.0 <= report.auc <= 1.0

    def test_perfect_separation_auc_exactly_one(self):
        pos = [0.0, 0.05, 0.1]
        neg = [0.9, 0.95, 1.0]
        report = roc_from_scores(pos, [True] * 3, neg, n_thresholds=201)
        assert report.auc == 1.0

    def test_random_scores_give_diagonal(self):
        aucs = []
        for seed in range(20):
            r = np.random.default_rng(seed)
            report = roc_from_scores(
                r.uniform(0, 1, 200), [True] * 200, r.uniform(0, 1, 200), n_thresholds=201
            )
            aucs.append(report.auc)
        assert abs(float(np.mean(aucs)) - 0.5) < 0.1

    def test_acceptance_only_tpr_flag(self):
        strict = roc_from_scores([0.1], [False], [0.9], n_thresholds=5, strict_tpr=True)
        loose = roc_from_scores([0.1], [False], [0.9], n_thresholds=5, strict_tpr=False)
        assert strict.points[-1][2] == 0.0
        assert loose.points[-1][2] == 1.0

    def test_empty_sides_rejected(self):
        with pytest.raises(DataError):
            roc_from_scores([], [], [0.5], n_thresholds=5)
        with pytest.raises(DataError):
            roc_from_scores([0.5], [True], [], n_thresholds=5)


class TestRocCurve:
    def test_end_to_end_on_corpus(self, small_setup):
        corpus, idx, encoder = small_setup
        negatives = ["qqqq zzzz completely unrelated", "xxxx yyyy nothing here", "wwww vvvv"]
        report = roc_curve(idx, encoder, corpus.test, negatives, n_thresholds=51)
        assert len(report.points) == 51
        assert 0.0 <= report.auc <= 1.0

    def test_empty_inputs_rejected(self, small_setup):
        corpus, idx, encoder = small_setup
        with pytest.raises(DataError):
            roc_curve(idx, encoder, [], ["neg"])
        with pytest.raises(DataError):
            roc_curve(idx, encoder, corpus.test, [])

    def test_exports(self, small_setup, tmp_path):
        corpus, idx, encoder = small_setup
        report = roc_curve(idx, encoder, corpus.test, ["zzz yyy"], n_thresholds=11)
        write_roc_report(report, tmp_path / "roc.jsonl")
        write_roc_points_tsv(report, tmp_path / "roc.tsv")
        assert len((tmp_path / "roc.jsonl").read_text().splitlines()) == 12
        rows = (tmp_path / "roc.tsv").read_text().strip().splitlines()
        assert all(len(row.split("\t")) == 2 for row in rows)


class TestBenchmark:
    def test_single_repeat_median(self, small_setup):
        corpus, idx, encoder = small_setup
        med, runs = benchmark_inference(idx, encoder, corpus.test, repeats=1)
        assert runs == [med]

    def test_run_list_length(self, small_setup):
        corpus, idx, encoder = small_setup
        med, runs = benchmark_inference(idx, encoder, corpus.test, repeats=4)
        assert len(runs) == 4
        s = sorted(runs)
        assert med == pytest.approx((s[1] + s[2]) / 2)

    def test_bad_repeats(self, small_setup):
        corpus, idx, encoder = small_setup
        with pytest.raises(ValueError):
            benchmark_inference(idx, encoder, corpus.test, repeats=0)


def test_encoder_invocation_count_is_query_count(small_setup):
    corpus, idx, encoder = small_setup
    calls = {"texts": 0}

    def counting_encoder(texts):
        calls["texts"] += len(texts)
        return encoder(texts)

    topk_accuracy(idx, counting_encoder, corpus.test)
    assert calls["texts"] == len(corpus.test)
