import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qcoreset import data, qnn, qsim
from qcoreset.data import LabeledDataset
from qcoreset.qnn import ReuploadConfig, TrainConfig
from qcoreset.qsim import GateOp, Observable


def random_config(rng, trainable=False):
    n = int(rng.integers(1, 5))
    d = int(rng.integers(1, 4))
    return ReuploadConfig(
        n, d,
        encoding_axis=str(rng.choice(["X", "Y", "Z"])),
        variational_axes=tuple(rng.choice(["X", "Y", "Z"], size=int(rng.integers(1, 3)))),
        encoding_weights=rng.uniform(0.5, 1.5, (d, n)),
        trainable_encoding=trainable,
    )


def test_parameter_counts():
    assert ReuploadConfig(3, 2).n_params == 6
    assert ReuploadConfig(3, 2, trainable_encoding=True).n_params == 12
    assert qnn.compile_ansatz(2, 4).n_params == 24


def test_identity_limit():
    cfg = ReuploadConfig(3, 2)
    assert qnn.qnn_forward(cfg, np.zeros(6), np.zeros(3)) == pytest.approx(1.0)


def test_single_qubit_closed_form():
    cfg = ReuploadConfig(1, 1, encoding_axis="Y")
    assert qnn.qnn_forward(cfg, [0.0], [math.pi]) == pytest.approx(-1.0)
    assert qnn.qnn_forward(cfg, [0.3], [0.5]) == pytest.approx(math.cos(0.8))


def test_forward_matches_dense_unitary(rng):
    cfg = random_config(rng)
    theta = rng.uniform(-3, 3, cfg.n_params)
    x = rng.uniform(0, 3, cfg.n_qubits)
    pc = cfg.circuit(cfg.n_qubits)
    angles = pc.angles(theta[None], x[None])[0]
    gates = [GateOp(g.kind, g.targets, float(a)) if np.isfinite(a) else g for g, a in zip(pc.gates, angles)]
    psi = qsim.dense_unitary(gates, cfg.n_qubits)[:, 0]
    assert qnn.qnn_forward(cfg, theta, x) == pytest.approx(qsim.expectation(psi, cfg.measurement), abs=1e-10)


@given(st.integers(0, 2**31 - 1))
def test_output_bounded_by_norm(seed):
    rng = np.random.default_rng(seed)
    cfg = random_config(rng)
    out = qnn.qnn_outputs(cfg, rng.uniform(-3, 3, cfg.n_params), rng.uniform(0, 3, (4, cfg.n_qubits)))
    assert np.all(np.abs(out) <= cfg.measurement.spectral_norm + 1e-12)


def test_losses_and_risk():
    assert qnn.qnn_loss(1, 1) == 0
    assert qnn.qnn_loss(-1, 1) == 4
    assert qnn.qnn_loss(0.25, -0.5) == pytest.approx(0.5625)
    cfg = ReuploadConfig(1, 1)
    x = np.array([[0.0], [math.pi / 2]])
    # outputs are 1 and 0, targets 1 and 1 -> losses 0 and 1
    assert qnn.weighted_risk(cfg, [0.0], x, [1, 1], [3, 1], "raw") == pytest.approx(0.5)
    assert qnn.weighted_risk(cfg, [0.0], x, [1, 1]) == pytest.approx(0.5)
    assert qnn.weighted_risk(cfg, [0.0], x[:1], [1], [7]) == pytest.approx(0.0)


def test_shift_gradient_closed_form():
    cfg = ReuploadConfig(1, 1, encoding_axis="Y")
    # with x = 0 the circuit is RY(theta): d<Z>/dtheta = -sin(theta); loss grad = 2(cos - y)(-sin)
    g = qnn.parameter_shift_grad(cfg, [math.pi / 2], [0.0], 0.0)
    assert g[0] == pytest.approx(2 * math.cos(math.pi / 2) * -1.0, abs=1e-12)
    ev = qnn._Evaluator(cfg, "features", np.zeros((1, 1)))
    _, jac = ev.jacobian(np.array([math.pi / 2]))
    assert jac[0, 0, 0] == pytest.approx(-1.0)


def test_identity_observable_gradient_zero(rng):
    cfg = ReuploadConfig(2, 2, measurement=Observable.pauli("II"))
    g = qnn.parameter_shift_grad(cfg, rng.uniform(-3, 3, 4), [0.3, 0.2], 1.0)
    np.testing.assert_allclose(g, 0.0, atol=1e-14)


@given(st.integers(0, 2**31 - 1), st.booleans())
def test_shift_matches_finite_difference(seed, trainable):
    rng = np.random.default_rng(seed)
    cfg = random_config(rng, trainable)
    theta = rng.uniform(-3, 3, cfg.n_params)
    x = rng.uniform(0, 3, int(rng.integers(1, cfg.n_qubits + 1)))
    y = float(rng.choice([-1.0, 1.0]))

    def loss(p):
        return qnn.qnn_loss(qnn.qnn_forward(cfg, p, x), y)

    np.testing.assert_allclose(qnn.parameter_shift_grad(cfg, theta, x, y), qnn.finite_difference_grad(loss, theta), atol=1e-6)


def test_multi_head_gradient_matches_fd(rng):
    cfg = qnn.one_vs_rest_config(2, 2, 3)
    theta = rng.uniform(-3, 3, cfg.n_params)
    x = rng.uniform(0, 3, 2)
    t = qnn.label_targets(np.array([2]), 3)[0]

    def loss(p):
        return float(((qnn.qnn_outputs(cfg, p, x[None])[0] - t) ** 2).mean())

    np.testing.assert_allclose(qnn.parameter_shift_grad(cfg, theta, x, t), qnn.finite_difference_grad(loss, theta), atol=1e-6)


def test_label_targets():
    np.testing.assert_array_equal(qnn.label_targets(np.array([0, 1]), 1)[:, 0], [-1, 1])
    np.testing.assert_array_equal(qnn.label_targets(np.array([1]), 3), [[-1, 1, -1]])


def test_density_path_matches_statevector(rng):
    cfg = ReuploadConfig(2, 2, variational_axes=("Y", "Z"))
    theta = rng.uniform(-3, 3, cfg.n_params)
    psi = qsim.haar_states(1, 2, rng)[0]
    circuit = cfg.circuit(None)
    angles = circuit.angles(theta[None], None)
    out = qsim.run_batch(circuit.gates, psi[None], angles)[0]
    expected = qsim.expectation(out, cfg.measurement)
    assert qnn.qnn_forward_density(cfg, theta, qsim.pure_density(psi)) == pytest.approx(expected, abs=1e-10)


def test_density_limits(rng):
    cfg = ReuploadConfig(2, 1)
    rho0 = qsim.pure_density(qsim.zero_state(2))
    assert qnn.qnn_forward_density(cfg, np.zeros(2), rho0) == pytest.approx(1.0)
    mixed = np.eye(4) / 4
    assert qnn.qnn_forward_density(cfg, rng.uniform(-3, 3, 2), mixed) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        qnn.qnn_forward_density(cfg, np.zeros(2), np.eye(2) / 2)


def test_parameter_validation():
    cfg = ReuploadConfig(2, 1)
    with pytest.raises(ValueError):
        qnn.qnn_forward(cfg, [0.0], [0.0, 0.0])
    with pytest.raises(ValueError):
        qnn.qnn_forward(cfg, [np.nan, 0.0], [0.0, 0.0])
    with pytest.raises(ValueError):
        qnn.qnn_forward(cfg, [0.0, 0.0], [0.0, 0.0, 0.0])


def toy_set():
    return LabeledDataset(np.array([[0.2], [2.9]]), [1, 0], 2)


def test_training_reduces_risk():
    rep = qnn.train_qnn(ReuploadConfig(1, 1), toy_set(), tcfg=TrainConfig(learning_rate=0.1, max_epochs=50, seed=1))
    assert rep.loss_trace[-1] < rep.initial_loss
    assert len(rep.loss_trace) <= 50


def test_zero_learning_rate_is_noop():
    tcfg = TrainConfig(learning_rate=0.0, max_epochs=3, seed=2)
    rep = qnn.train_qnn(ReuploadConfig(1, 2), toy_set(), tcfg=tcfg, params=[0.4, -0.1])
    np.testing.assert_array_equal(rep.params, [0.4, -0.1])
    assert rep.loss_trace[-1] == rep.initial_loss


def test_unit_weights_match_unweighted():
    tcfg = TrainConfig(max_epochs=5, seed=3)
    a = qnn.train_qnn(ReuploadConfig(1, 2), toy_set(), None, tcfg)
    b = qnn.train_qnn(ReuploadConfig(1, 2), toy_set(), np.ones(2), tcfg)
    np.testing.assert_array_equal(a.params, b.params)


def test_finite_difference_mode_agrees():
    kw = dict(max_epochs=3, seed=4, full_batch=True)
    a = qnn.train_qnn(ReuploadConfig(1, 2), toy_set(), tcfg=TrainConfig(**kw))
    b = qnn.train_qnn(ReuploadConfig(1, 2), toy_set(), tcfg=TrainConfig(gradient_mode="finite-difference", **kw))
    np.testing.assert_allclose(a.params, b.params, atol=1e-7)


def test_divergence_guard():
    ds = LabeledDataset(np.array([[0.2], [2.9]]), [1, 0], 2)
    with pytest.raises(FloatingPointError):
        qnn.train_qnn(ReuploadConfig(1, 1), ds, weights=[1e9, 1], tcfg=TrainConfig(learning_rate=1e3, max_epochs=5, weight_mode="raw"))


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(max_epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(weight_mode="other")


def test_checkpoint_round_trip(tmp_path):
    cfg = qnn.one_vs_rest_config(2, 1, 3, trainable_encoding=True)
    ds = LabeledDataset(np.array([[0.1, 0.2], [1.0, 2.0], [3.0, 0.5]]), [0, 1, 2], 3)
    rep = qnn.train_qnn(cfg, ds, tcfg=TrainConfig(max_epochs=2))
    qnn.save_checkpoint(tmp_path / "c.json", cfg, rep)
    cfg2, params = qnn.load_checkpoint(tmp_path / "c.json")
    np.testing.assert_array_equal(params, rep.params)
    np.testing.assert_allclose(qnn.qnn_outputs(cfg2, params, ds.features), qnn.qnn_outputs(cfg, rep.params, ds.features))
    rep.write_epoch_csv(tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text().startswith("epoch,weighted_risk")


def test_compile_identity_target_noop(rng):
    pairs = data.StatePairDataset(qsim.haar_states(4, 1, rng), qsim.haar_states(4, 1, rng), 1)
    pairs = data.StatePairDataset(pairs.inputs, pairs.inputs, 1)
    cfg = ReuploadConfig(1, 1, encoding_axis="Z")
    rep = qnn.train_compiler(pairs, cfg, TrainConfig(init="zeros", max_epochs=3))
    assert rep.initial_loss == pytest.approx(0.0, abs=1e-14)
    np.testing.assert_allclose(rep.params, 0.0, atol=1e-14)


def test_compile_one_qubit_landscape(rng):
    target = [GateOp("RY", (0,), 0.7)]
    pairs = data.gen_compiling_dataset(target, 6, seed=1, n_qubits=1)
    cfg = ReuploadConfig(1, 1, encoding_axis="Y")
    for theta in (0.2, 0.7, 1.5):
        fid = qnn.compile_fidelities(cfg, [theta], pairs)
        # only relative rotation matters on every input
        assert np.all(fid <= 1 + 1e-12)
    assert qnn.compile_success_fraction(cfg, [0.7], pairs) == 1.0
    rep = qnn.train_compiler(pairs, cfg, TrainConfig(learning_rate=0.3, max_epochs=200, tol=1e-16, seed=0))
    assert all(0 <= v <= 1 for v in rep.loss_trace)
    assert math.remainder(rep.params[0] - 0.7, 4 * math.pi) == pytest.approx(0.0, abs=1e-4)


def test_compile_width_checked(rng):
    pairs = data.gen_compiling_dataset([GateOp("H", (0,))], 2, seed=0, n_qubits=2)
    with pytest.raises(ValueError):
        qnn.train_compiler(pairs, qnn.compile_ansatz(1, 1))
