import gzip
import math
import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qcoreset import data, qsim
from qcoreset.data import LabeledDataset


def write_csv(path, text):
    path.write_text(text)
    return path


def test_csv_label_remap(tmp_path):
    ds = data.load_csv(write_csv(tmp_path / "a.csv", "f1,f2,y\n1,2,5\n3,4,5\n5,6,7\n"))
    assert ds.labels.tolist() == [0, 0, 1]
    assert ds.n_c == 2
    assert ds.provenance["original_labels"] == [5, 7]


def test_csv_single_row(tmp_path):
    ds = data.load_csv(write_csv(tmp_path / "a.csv", "a,b,c,d,y\n1,2,3,4,0\n"))
    assert (ds.n, ds.d_x) == (1, 4)


def test_csv_named_label_column(tmp_path):
    ds = data.load_csv(write_csv(tmp_path / "a.csv", "y,f\n1,0.5\n0,0.25\n"), "y")
    np.testing.assert_allclose(ds.features[:, 0], [0.5, 0.25])


@pytest.mark.parametrize(
    "text, message",
    [
        ("a,y\nx,1\n", "non-numeric"),
        ("a,b,y\n1,2\n", "ragged"),
        ("a,y\n", "empty"),
        ("a,y\n1,0.5\n", "not an integer"),
    ],
)
def test_csv_errors(tmp_path, text, message):
    with pytest.raises(ValueError, match=message):
        data.load_csv(write_csv(tmp_path / "bad.csv", text))


def test_idx_round_trip(tmp_path):
    images = np.arange(2 * 3 * 3, dtype=np.uint8).reshape(2, 3, 3)
    img_path = tmp_path / "img.idx.gz"
    with gzip.open(img_path, "wb") as fh:
        fh.write(bytes([0, 0, 0x08, 3]) + struct.pack(">III", 2, 3, 3) + images.tobytes())
    lab_path = tmp_path / "lab.idx"
    lab_path.write_bytes(bytes([0, 0, 0x08, 1]) + struct.pack(">I", 2) + bytes([9, 4]))
    ds = data.load_idx(img_path, lab_path)
    assert ds.features.shape == (2, 9)
    assert ds.labels.tolist() == [0, 1]


def test_dataset_json_round_trip(tmp_path, rng):
    ds = LabeledDataset(rng.normal(size=(6, 3)), [0, 1, 2, 0, 1, 2], 3, {"seed": 1})
    data.save_dataset(ds, tmp_path / "d.json")
    back = data.load_dataset(tmp_path / "d.json")
    np.testing.assert_array_equal(back.features, ds.features)
    np.testing.assert_array_equal(back.labels, ds.labels)


def test_dataset_invariants():
    with pytest.raises(ValueError):
        LabeledDataset(np.zeros((2, 1)), [0, 0], 2)
    with pytest.raises(ValueError):
        LabeledDataset(np.array([[np.nan], [0.0]]), [0, 1], 2)


def test_pca_rank_one():
    t = np.linspace(-1, 1, 20)[:, None]
    ds = LabeledDataset(t * np.array([[1.0, 2.0, -2.0]]), np.zeros(20, dtype=int), 1)
    model, _ = data.pca_fit_transform(ds, 1)
    total = np.var(ds.features, axis=0, ddof=1).sum()
    assert model.explained_variance[0] == pytest.approx(total)


def test_pca_identical_points():
    ds = LabeledDataset(np.ones((5, 3)), np.zeros(5, dtype=int), 1)
    model, out = data.pca_fit_transform(ds, 2)
    np.testing.assert_allclose(model.explained_variance, 0.0, atol=1e-14)
    np.testing.assert_allclose(out.features, 0.0, atol=1e-14)


def test_pca_full_rank_round_trip(rng):
    ds = LabeledDataset(rng.normal(size=(50, 8)), np.zeros(50, dtype=int), 1)
    model, out = data.pca_fit_transform(ds, 8)
    np.testing.assert_allclose(model.inverse_transform(out.features), ds.features, atol=1e-8)


def test_pca_rejects_bad_width(rng):
    ds = LabeledDataset(rng.normal(size=(5, 3)), np.zeros(5, dtype=int), 1)
    with pytest.raises(ValueError):
        data.pca_fit_transform(ds, 4)


def test_scale_features():
    ds = LabeledDataset(np.array([[0.0, 3.0], [1.0, 3.0], [2.0, 3.0]]), [0, 0, 0], 1)
    _, out = data.scale_features(ds)
    np.testing.assert_allclose(out.features[:, 0], [0, math.pi / 2, math.pi])
    np.testing.assert_allclose(out.features[:, 1], math.pi / 2)


def test_scale_identity_in_range():
    x = np.array([[0.0], [math.pi], [1.0]])
    _, out = data.scale_features(LabeledDataset(x, [0, 0, 0], 1))
    np.testing.assert_allclose(out.features, x)


def test_split_balanced():
    labels = np.repeat([0, 1], 500)
    ds = LabeledDataset(np.arange(1000.0)[:, None], labels, 2)
    tr, te = data.split(ds, 0.2, seed=3)
    assert (tr.n, te.n) == (800, 200)
    assert np.bincount(te.labels).tolist() == [100, 100]
    tr2, te2 = data.split(ds, 0.2, seed=3)
    np.testing.assert_array_equal(te.features, te2.features)
    together = np.sort(np.concatenate([tr.features[:, 0], te.features[:, 0]]))
    np.testing.assert_array_equal(together, ds.features[:, 0])


def test_split_smallest_case():
    ds = LabeledDataset(np.arange(4.0)[:, None], [0, 0, 1, 1], 2)
    tr, te = data.split(ds, 0.5, 0)
    assert (tr.n, te.n) == (2, 2)


def test_split_rejects_singleton_class():
    ds = LabeledDataset(np.arange(3.0)[:, None], [0, 0, 1], 2)
    with pytest.raises(ValueError, match="fewer than 2"):
        data.split(ds, 0.5, 0)


@pytest.mark.parametrize(
    "p, theta, label",
    [(0.2, 1.0, data.SEPARABLE), (0.9, math.pi / 4, data.NONLOCAL), (0.5, 1.0, data.ENTANGLED)],
)
def test_correlation_examples(p, theta, label):
    assert data.correlation_label(p, theta) == label


def test_correlation_steerable_band():
    # theta near 0: nonlocal threshold near 1, so p in (1/sqrt2, 1) is steerable
    assert data.correlation_label(0.8, 0.05) == data.STEERABLE


@pytest.mark.parametrize("p, theta", [(0.0, 1.0), (1.0, 1.0), (0.5, 0.0), (0.5, 2 * math.pi)])
def test_correlation_domain(p, theta):
    with pytest.raises(ValueError):
        data.correlation_label(p, theta)


def test_correlation_state_limits():
    rho = data.correlation_state(1.0, math.pi / 4)
    assert qsim.purity(rho) == pytest.approx(1.0)
    th = math.pi / 3
    rho0 = data.correlation_state(1e-12, th)
    np.testing.assert_allclose(rho0, np.kron(np.eye(2) / 2, np.diag([math.cos(th) ** 2, math.sin(th) ** 2])), atol=1e-11)


@given(st.floats(0.01, 0.99), st.floats(0.01, 6.27))
def test_correlation_state_is_density(p, theta):
    qsim.check_density(data.correlation_state(p, theta), tol=1e-10)


def test_correlation_dataset_seeded():
    a = data.gen_correlation_dataset(20, 4)
    b = data.gen_correlation_dataset(20, 4)
    assert [s.p for s in a] == [s.p for s in b]
    assert all(data.correlation_label(s.p, s.theta) == s.label for s in a)


def test_compiling_dataset_targets():
    target = data.random_target_unitary(2, 20, seed=1)
    assert len(target) == 20
    pairs = data.gen_compiling_dataset(target, 5, seed=2, n_qubits=2)
    u = qsim.dense_unitary(target, 2)
    np.testing.assert_allclose(pairs.targets, pairs.inputs @ u.T, atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(pairs.inputs, axis=1), 1.0)


def test_gaussian_mixture_shape():
    ds = data.gaussian_mixture(40, 3, 4, seed=0)
    assert ds.features.shape == (40, 3)
    assert np.bincount(ds.labels).tolist() == [10, 10, 10, 10]
