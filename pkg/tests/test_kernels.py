"""Backend contract: numpy and compiled kernels must agree on superpositions."""
import subprocess
import sys

import numpy as np
import pytest

from diracbohm._kernels import numpy_backend

try:
    from diracbohm._kernels import _corekernels as compiled
except ImportError:
    compiled = None

needs_compiled = pytest.mark.skipif(
    compiled is None, reason="compiled kernel unavailable"
)


def make_case(w, n, seed):
    rng = np.random.default_rng(seed)
    phases = rng.standard_normal((w, 4))
    coeffs = rng.standard_normal((w, 4)) + 1j * rng.standard_normal((w, 4))
    points = rng.standard_normal((n, 4))
    return phases, coeffs, points


def direct_eval(phases, coeffs, points):
    # reference formula, no chunking, no BLAS staging
    e = np.exp(1j * points @ phases.T)
    return e @ coeffs


def test_numpy_matches_direct_small():
    phases, coeffs, points = make_case(7, 40, seed=1)
    out = numpy_backend.superpose_eval(phases, coeffs, points)
    assert np.abs(out - direct_eval(phases, coeffs, points)).max() < 1e-13


def test_numpy_chunk_boundary():
    # size straddles several internal chunks plus a ragged tail
    n = 3 * 8192 + 17
    phases, coeffs, points = make_case(3, n, seed=2)
    out = numpy_backend.superpose_eval(phases, coeffs, points)
    ref = direct_eval(phases, coeffs, points)
    assert out.shape == (n, 4)
    assert np.abs(out - ref).max() < 1e-12


def test_numpy_gradient_matches_formula():
    phases, coeffs, points = make_case(5, 30, seed=3)
    vals, grads = numpy_backend.superpose_eval_grad(phases, coeffs, points)
    assert np.abs(vals - direct_eval(phases, coeffs, points)).max() < 1e-13
    e = np.exp(1j * points @ phases.T)
    for mu in range(4):
        ref = e @ (1j * phases[:, mu : mu + 1] * coeffs)
        assert np.abs(grads[:, mu, :] - ref).max() < 1e-13


def test_numpy_gradient_finite_difference():
    phases, coeffs, points = make_case(6, 20, seed=4)
    _, grads = numpy_backend.superpose_eval_grad(phases, coeffs, points)
    h = 1e-6
    for mu in range(4):
        step = np.zeros(4)
        step[mu] = h
        fd = (
            numpy_backend.superpose_eval(phases, coeffs, points + step)
            - numpy_backend.superpose_eval(phases, coeffs, points - step)
        ) / (2 * h)
        assert np.abs(fd - grads[:, mu, :]).max() < 1e-8


def test_empty_waves_and_empty_points():
    phases = np.zeros((0, 4))
    coeffs = np.zeros((0, 4), dtype=complex)
    points = np.random.default_rng(5).standard_normal((9, 4))
    out = numpy_backend.superpose_eval(phases, coeffs, points)
    assert out.shape == (9, 4) and np.all(out == 0)
    phases2, coeffs2, _ = make_case(4, 1, seed=6)
    out2 = numpy_backend.superpose_eval(phases2, coeffs2, np.zeros((0, 4)))
    assert out2.shape == (0, 4)


@needs_compiled
def test_compiled_matches_numpy():
    phases, coeffs, points = make_case(23, 3001, seed=7)
    a = numpy_backend.superpose_eval(phases, coeffs, points)
    b = compiled.superpose_eval(phases, coeffs, points)
    scale = np.abs(a).max()
    assert np.abs(a - b).max() < 1e-13 * max(scale, 1.0)
    va, ga = numpy_backend.superpose_eval_grad(phases, coeffs, points)
    vb, gb = compiled.superpose_eval_grad(phases, coeffs, points)
    gscale = np.abs(ga).max()
    assert np.abs(va - vb).max() < 1e-13 * max(scale, 1.0)
    assert np.abs(ga - gb).max() < 1e-13 * max(gscale, 1.0)


@needs_compiled
def test_compiled_thread_count_is_bitwise_invariant():
    # per-point accumulation order is fixed, so the thread split cannot
    # change a single bit of the result
    phases, coeffs, points = make_case(11, 2000, seed=8)
    compiled.set_num_threads(1)
    a = compiled.superpose_eval(phases, coeffs, points)
    _, ga = compiled.superpose_eval_grad(phases, coeffs, points)
    compiled.set_num_threads(4)
    b = compiled.superpose_eval(phases, coeffs, points)
    _, gb = compiled.superpose_eval_grad(phases, coeffs, points)
    compiled.set_num_threads(1)
    assert np.array_equal(a, b)
    assert np.array_equal(ga, gb)


def test_backend_env_var_selection():
    code = (
        "import diracbohm._kernels as k; print(k.BACKEND_NAME)"
    )
    out = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True,
        text=True,
        env={"DIRACBOHM_KERNELS": "numpy", "PATH": "/usr/bin:/bin"},
    )
    assert out.returncode == 0
    assert out.stdout.strip() == "numpy"
    bad = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True,
        text=True,
        env={"DIRACBOHM_KERNELS": "nonsense", "PATH": "/usr/bin:/bin"},
    )
    assert bad.returncode != 0
    assert "nonsense" in bad.stderr
