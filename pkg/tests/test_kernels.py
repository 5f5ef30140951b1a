import os
import subprocess
import sys

import numpy as np
import pytest

from treetrace import kernels

needs_compiled = pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled extension not built")


def _grid_oracle_1d(v, j, R):
    """Shift by j fine cells after splitting each of the M cells into R: exact for such shifts."""
    w = np.repeat(v, R)
    n = w.size
    j = abs(j)
    return float(np.sum(np.abs(w[j:] - w[: n - j]) ** 2) / n)


def _grid_oracle_2d(v, j, R):
    w = np.repeat(np.repeat(v, R, axis=0), R, axis=1)
    n = w.shape[0]
    a, b = j
    sa = slice(max(a, 0), n + min(a, 0))
    ta = slice(max(-a, 0), n + min(-a, 0))
    sb = slice(max(b, 0), n + min(b, 0))
    tb = slice(max(-b, 0), n + min(-b, 0))
    return float(np.sum(np.abs(w[sa, sb] - w[ta, tb]) ** 2) / n**2)


@pytest.mark.parametrize("backend", ["python", pytest.param("cython", marks=needs_compiled)])
def test_shift_energy_1d_against_refined_grid(rng, backend):
    M, R = 16, 8
    v = rng.standard_normal(M) + 1j * rng.standard_normal(M)
    js = [0, 1, -3, 7, 8, 40, -77, 127]
    got = kernels.shift_energy(v, np.array([[j / (M * R)] for j in js]), backend=backend)
    want = [_grid_oracle_1d(v, j, R) for j in js]
    assert np.allclose(got, want, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("backend", ["python", pytest.param("cython", marks=needs_compiled)])
def test_shift_energy_2d_against_refined_grid(rng, backend):
    M, R = 8, 4
    v = rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))
    js = [(0, 0), (1, 0), (0, -3), (5, 7), (-9, 2), (31, -31)]
    got = kernels.shift_energy(v, np.array(js, dtype=float) / (M * R), backend=backend)
    want = [_grid_oracle_2d(v, j, R) for j in js]
    assert np.allclose(got, want, rtol=1e-12, atol=1e-14)


def test_shift_energy_3d_fallback(rng):
    v = rng.standard_normal((4, 4, 4))
    out = kernels.shift_energy(v, np.array([[0.25, 0.0, 0.0], [0.0, 0.0, 0.0]]))
    assert out[1] == 0.0
    assert out[0] == pytest.approx(np.sum((v[1:] - v[:-1]) ** 2) / 64, rel=1e-13)


def test_shift_energy_checks_shape(rng):
    with pytest.raises(ValueError):
        kernels.shift_energy(np.zeros((4, 4)), np.zeros((3, 1)))


@needs_compiled
def test_backends_agree(rng):
    for shape in [(64,), (32, 32)]:
        v = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        z = rng.uniform(-1, 1, size=(200, len(shape)))
        a = kernels.shift_energy(v, z, backend="python")
        b = kernels.shift_energy(v, z, backend="cython")
        assert np.allclose(a, b, rtol=1e-12, atol=1e-14)
    v = rng.standard_normal(100) + 1j * rng.standard_normal(100)
    for s in (0.1, 0.25, 0.45):
        a = kernels.gagliardo_1d(v, s, backend="python")
        b = kernels.gagliardo_1d(v, s, backend="cython")
        assert b == pytest.approx(a, rel=1e-12)


@pytest.mark.parametrize("threads", [2, 3, 8])
def test_threads_do_not_change_results(rng, threads):
    v = rng.standard_normal((16, 16))
    z = rng.uniform(-0.5, 0.5, size=(101, 2))
    serial = kernels.shift_energy(v, z, threads=1)
    parallel = kernels.shift_energy(v, z, threads=threads)
    assert np.array_equal(serial, parallel)


def test_gagliardo_1d_pair_sum(rng):
    from treetrace._kernels_py import pair_kernel

    v = rng.standard_normal(12)
    s = 0.3
    want = sum(abs(v[a] - v[b]) ** 2 * pair_kernel(np.array([b - a]), s)[0] for a in range(12) for b in range(a + 1, 12))
    assert kernels.gagliardo_1d(v, s) == pytest.approx(want, rel=1e-12)


def test_environment_forces_fallback():
    env = dict(os.environ, TREETRACE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import treetrace; print(treetrace.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@pytest.mark.parametrize("shape", [(8,), (4, 4), (16, 16)])
def test_python_backend_is_chunk_invariant(rng, shape):
    v = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    z = rng.uniform(-1, 1, size=(40, len(shape)))
    whole = kernels.shift_energy(v, z, backend="python")
    parts = np.concatenate([kernels.shift_energy(v, z[i : i + 3], backend="python") for i in range(0, 40, 3)])
    assert np.array_equal(whole, parts)
