import os
import subprocess
import sys

import numpy as np
import pytest

from sharptrace import kernels

HAS_C = "cython" in kernels.available()


def problem(rng, m, n):
    X, Y = rng.normal(size=(m, 2)), rng.normal(size=(n, 2))
    C = ((X[:, None] - Y[None]) ** 2).sum(-1)
    a = rng.uniform(0.1, 1, m)
    b = rng.uniform(0.1, 1, n)
    b *= a.sum() / b.sum()
    b[-1] += a.sum() - b.sum()
    return C, a, b


@pytest.mark.skipif(not HAS_C, reason="compiled extension not built")
@pytest.mark.parametrize("size", [(5, 5), (17, 11), (40, 60)])
def test_simplex_backends_agree(size):
    rng = np.random.default_rng(size[0])
    C, a, b = problem(rng, *size)
    tol = 1e-12 * C.max()
    py = kernels.backend("python").transport_simplex(C, a, b, 100000, tol)
    cy = kernels.backend("cython").transport_simplex(C, a, b, 100000, tol)
    cost = lambda r: float(np.asarray(r[2]) @ C[np.asarray(r[0]), np.asarray(r[1])])
    assert cost(py) == pytest.approx(cost(cy), rel=1e-12)
    assert list(py[0]) == list(cy[0]) and list(py[1]) == list(cy[1])


@pytest.mark.skipif(not HAS_C, reason="compiled extension not built")
def test_ag_gap_backends_agree():
    eigs = np.exp(np.random.default_rng(0).uniform(-2, 2, size=(500, 3)))
    py = np.asarray(kernels.backend("python").ag_gaps(eigs, 4.0))
    cy = np.asarray(kernels.backend("cython").ag_gaps(eigs, 4.0))
    assert np.allclose(py, cy, rtol=1e-13, atol=1e-15)


def test_ag_gap_formula():
    eigs = np.array([[1.0, 1.0, 1.0], [2.0, 0.5, 3.0]])
    a, n = 4.0, 3
    expected = (eigs.sum(1) + a - n) / a - np.prod(eigs, axis=1) ** (1 / a)
    assert np.allclose(np.asarray(kernels.ag_gaps(eigs, a)), expected)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.backend("fortran")


def test_pure_python_fallback_is_selected():
    env = dict(os.environ, SHARPTRACE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from sharptrace import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
