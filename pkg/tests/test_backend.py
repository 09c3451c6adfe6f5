import os
import subprocess
import sys

import numpy as np
import pytest

from qcoreset import _backend, qsim

BACKENDS = _backend.available()


def test_active_backend_is_known():
    assert _backend.BACKEND in BACKENDS
    assert "python" in BACKENDS


def test_forced_python_backend():
    out = subprocess.run(
        [sys.executable, "-c", "import qcoreset; print(qcoreset.BACKEND)"],
        env=dict(os.environ, QCORESET_BACKEND="python"), capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"


def test_unknown_backend_rejected():
    out = subprocess.run(
        [sys.executable, "-c", "import qcoreset"],
        env=dict(os.environ, QCORESET_BACKEND="fortran"), capture_output=True, text=True,
    )
    assert out.returncode != 0


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_gram_overlaps(name, rng):
    states = qsim.haar_states(7, 3, rng)
    k = BACKENDS[name].gram_overlaps(states)
    np.testing.assert_allclose(k, np.abs(states.conj() @ states.T) ** 2, atol=1e-13)
    np.testing.assert_allclose(BACKENDS[name].cross_overlaps(states[:3], states), k[:3], atol=1e-13)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_jacobi(name, rng):
    a = rng.normal(size=(9, 9))
    a = a + a.T
    w, v, sweeps, off = BACKENDS[name].jacobi_eig(a, 1e-12, 100)
    assert off < 1e-12
    np.testing.assert_allclose(np.sort(w), np.linalg.eigvalsh(a), atol=1e-10)
    np.testing.assert_allclose(v.T @ v, np.eye(9), atol=1e-10)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_smo(name, rng):
    x = rng.normal(size=(12, 2))
    y = np.where(x[:, 0] + 0.3 * rng.normal(size=12) > 0, 1.0, -1.0)
    q = np.outer(y, y) * (x @ x.T + 1.0)
    a, g, it, gap, _ = BACKENDS[name].smo_solve(q, y, np.full(12, 2.0), 1e-8, 100000, False)
    assert gap < 1e-8
    assert abs(a @ y) < 1e-9
    np.testing.assert_allclose(g, q @ a - 1.0, atol=1e-8)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled extension not built")
def test_backends_agree(rng):
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    states = qsim.haar_states(10, 2, rng)
    np.testing.assert_allclose(py.gram_overlaps(states), cy.gram_overlaps(states), atol=1e-14)
    a = rng.normal(size=(6, 6))
    a = a + a.T
    np.testing.assert_allclose(py.jacobi_eig(a, 1e-12, 100)[0], cy.jacobi_eig(a, 1e-12, 100)[0], atol=1e-12)
    y = np.array([1.0, -1, 1, -1, 1, -1])
    q = np.outer(y, y) * (a @ a.T)
    ra = py.smo_solve(q, y, np.ones(6), 1e-9, 100000, True)
    rb = cy.smo_solve(q, y, np.ones(6), 1e-9, 100000, True)
    np.testing.assert_allclose(ra[0], rb[0], atol=1e-10)
    assert ra[2] == rb[2]
