"""Distance metric formulas, axioms, and vectorized helpers."""

from __future__ import annotations

import numpy as np
import pytest

from entstd.metrics import distance, distances_to, pairwise_distances


@pytest.mark.parametrize(
    "metric,u,v,expected",
    [
        ("cosine", (1, 0), (1, 0), 0.0),
        ("cosine", (1, 0), (-1, 0), 2.0),
        ("euclidean", (0, 0), (3, 4), 5.0),
        ("sqeuclidean", (0, 0), (3, 4), 25.0),
    ],
)
def test_hand_values(metric, u, v, expected):
    assert distance(metric, np.array(u, float), np.array(v, float)) == pytest.approx(expected, abs=1e-12)


def test_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        distance("euclidean", np.zeros(2), np.zeros(3))


def test_zero_vector_cosine_is_error():
    with pytest.raises(ValueError, match="zero"):
        distance("cosine", np.zeros(3), np.ones(3))


def test_unknown_metric():
    with pytest.raises(ValueError, match="unknown metric"):
        distance("manhattan", np.ones(2), np.ones(2))


def test_metric_axioms_on_random_vectors(rng):
    for _ in range(200):
        dim = int(rng.integers(1, 8))
        u, v, w = (rng.normal(size=dim) for _ in range(3))
        for metric in ("cosine", "euclidean", "sqeuclidean"):
            duv = distance(metric, u, v)
            assert duv >= -1e-15
            assert duv == pytest.approx(distance(metric, v, u), abs=1e-12)
        # triangle inequality holds for the euclidean metric
        assert distance("euclidean", u, w) <= (
            distance("euclidean", u, v) + distance("euclidean", v, w) + 1e-12
        )
        # squared-euclidean is exactly the square
        assert distance("sqeuclidean", u, v) == pytest.approx(
            distance("euclidean", u, v) ** 2, abs=1e-12
        )


def test_cosine_scale_invariance(rng):
    for _ in range(100):
        u = rng.normal(size=5)
        v = rng.normal(size=5)
        c = float(rng.uniform(0.01, 100.0))
        assert distance("cosine", c * u, v) == pytest.approx(
            distance("cosine", u, v), abs=1e-9
        )


def test_pairwise_matches_scalar(rng):
    points = rng.normal(size=(7, 3))
    for metric in ("cosine", "euclidean", "sqeuclidean"):
        mat = pairwise_distances(metric, points)
        for i in range(7):
            for j in range(7):
                if i == j:
                    continue
                assert mat[i, j] == pytest.approx(
                    distance(metric, points[i], points[j]), abs=1e-10
                )
        assert np.allclose(np.diag(mat), 0.0)


def test_distances_to_matches_scalar(rng):
    points = rng.normal(size=(9, 4))
    q = rng.normal(size=4)
    for metric in ("cosine", "euclidean", "sqeuclidean"):
        d = distances_to(metric, q, points)
        for i in range(9):
            assert d[i] == pytest.approx(distance(metric, q, points[i]), abs=1e-12)


def test_distances_to_zero_query_policy():
    points = np.ones((3, 2))
    with pytest.raises(ValueError):
        distances_to("cosine", np.zeros(2), points)
    d = distances_to("cosine", np.zeros(2), points, zero_query="max")
    assert np.all(d == 1.0)
