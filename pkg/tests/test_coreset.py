from itertools import combinations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qcoreset import coreset, qsim
from qcoreset.data import LabeledDataset


def line_dataset():
    return LabeledDataset(np.array([[0.0], [1.0], [2.0], [10.0]]), [0, 0, 0, 0], 1)


def brute_force_radius(points, k):
    """Optimal k-center radius by exhaustive search (Euclidean)."""
    best = np.inf
    d = np.linalg.norm(points[:, None] - points[None], axis=-1)
    for centers in combinations(range(len(points)), k):
        best = min(best, d[:, centers].min(axis=1).max())
    return best


def test_forced_first_center_line():
    cs = coreset.greedy_k_center(line_dataset(), 2, first={0: 0})
    assert sorted(cs.center_indices.tolist()) == [0, 3]
    assert cs.radius == 2.0
    assert brute_force_radius(line_dataset().features, 2) == 1.0
    assert cs.weights.tolist() == [3, 1]
    assert cs.weights.sum() == 4


def test_covering_radius_line():
    assert coreset.covering_radius(line_dataset(), [0, 3], "euclidean", 0) == 2.0


def test_class_quotas():
    assert coreset.class_quotas([750, 250], 100) == [75, 25]
    # ceil rounding can overshoot k; a full class passes its surplus along
    assert coreset.class_quotas([2, 10], 11) == [2, 10]


def test_k_equals_n_gives_zero_radius(rng):
    ds = LabeledDataset(rng.normal(size=(9, 2)), [0, 1, 2] * 3, 3)
    cs = coreset.greedy_k_center(ds, 9)
    assert cs.radius == 0.0
    assert sorted(cs.center_indices.tolist()) == list(range(9))
    assert cs.weights.tolist() == [1] * 9


@given(st.integers(0, 2**31 - 1))
def test_two_approximation_property(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 11))
    k = int(rng.integers(1, min(4, n) + 1))
    pts = rng.normal(size=(n, 2))
    cs = coreset.greedy_k_center(LabeledDataset(pts, np.zeros(n, dtype=int), 1), k, seed=seed)
    assert cs.radius <= 2 * brute_force_radius(pts, k) + 1e-12


@given(st.integers(0, 2**31 - 1))
def test_weights_cover_each_class(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(6, 30))
    labels = np.arange(n) % 3
    ds = LabeledDataset(rng.normal(size=(n, 3)), labels, 3)
    k = int(rng.integers(3, n + 1))
    cs = coreset.greedy_k_center(ds, k, seed=seed)
    assert len(set(cs.center_indices.tolist())) == cs.size
    # every center covers at least itself, and each class is fully covered
    assert np.all(cs.weights >= 1)
    for c in range(3):
        own = ds.labels[cs.center_indices] == c
        assert cs.weights[own].sum() >= np.count_nonzero(labels == c)


def test_seed_determinism(rng):
    ds = LabeledDataset(rng.normal(size=(30, 2)), np.arange(30) % 2, 2)
    a = coreset.greedy_k_center(ds, 6, seed=5)
    b = coreset.greedy_k_center(ds, 6, seed=5)
    np.testing.assert_array_equal(a.center_indices, b.center_indices)


def test_k_out_of_range(rng):
    ds = LabeledDataset(rng.normal(size=(4, 2)), [0, 1, 0, 1], 2)
    with pytest.raises(ValueError):
        coreset.greedy_k_center(ds, 1)
    with pytest.raises(ValueError):
        coreset.greedy_k_center(ds, 5)


def test_forced_center_must_be_in_class():
    ds = LabeledDataset(np.arange(4.0)[:, None], [0, 0, 1, 1], 2)
    with pytest.raises(ValueError):
        coreset.greedy_k_center(ds, 2, first={0: 3})


def test_metrics(rng):
    psi = qsim.haar_states(3, 2, rng)
    assert coreset.distance(psi[0], psi[0], "infidelity") == pytest.approx(0.0, abs=1e-7)
    assert coreset.distance(psi[0], psi[1], "infidelity") == pytest.approx(qsim.trace_distance(psi[0], psi[1]))
    rhos = np.stack([qsim.pure_density(p) for p in psi])
    hs = coreset.distance(rhos[0], rhos[1], "hilbert-schmidt")
    assert hs == pytest.approx(np.linalg.norm(rhos[0] - rhos[1]))
    with pytest.raises(ValueError):
        coreset.distance(psi[0], psi[1], "manhattan")


def test_default_metric(rng):
    real = LabeledDataset(rng.normal(size=(2, 2)), [0, 0], 1)
    states = LabeledDataset(qsim.haar_states(2, 1, rng), [0, 0], 1)
    rhos = LabeledDataset(np.stack([np.eye(2) / 2] * 2), [0, 0], 1)
    assert [coreset.default_metric(d) for d in (real, states, rhos)] == ["euclidean", "infidelity", "hilbert-schmidt"]


def test_weighted_mean_modes():
    assert coreset.weighted_mean([0, 1], [3, 1], "raw") == 0.5
    assert coreset.weighted_mean([0, 1], [3, 1], "normalized") == 0.25
    assert coreset.coreset_error([0, 0, 1, 1], [0, 1], [3, 1]) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        coreset.weighted_mean([], [])


def test_random_subset(rng):
    ds = LabeledDataset(rng.normal(size=(20, 2)), [0] * 19 + [1], 2)
    idx = coreset.random_subset(ds, 3, seed=0)
    assert len(set(idx.tolist())) == 3
    assert set(ds.labels[idx].tolist()) == {0, 1}


def test_json_round_trip(tmp_path, rng):
    ds = LabeledDataset(rng.normal(size=(12, 2)), np.arange(12) % 2, 2)
    cs = coreset.greedy_k_center(ds, 4)
    cs.save(tmp_path / "c.json")
    back = coreset.Coreset.load(tmp_path / "c.json")
    np.testing.assert_array_equal(back.center_indices, cs.center_indices)
    assert back.radius == cs.radius
