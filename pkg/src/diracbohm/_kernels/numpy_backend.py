"""NumPy evaluation of plane-wave superpositions over batches of events.

The (points x waves) phase matrix is materialized in chunks: a full matrix
at 1e5 points and a few hundred waves would cost hundreds of MB, while a
chunk stays inside cache-friendly territory and the per-chunk work is pure
BLAS.
"""
from __future__ import annotations

import numpy as np

BACKEND_NAME = "numpy"

_CHUNK = 8192


def set_num_threads(n: int) -> None:
    """No-op: BLAS threading is controlled by the environment."""


def superpose_eval(phases, coeffs, points):
    """sum_w exp(i phases[w] . x) coeffs[w] for each event row x of points.

    phases: (W, 4) float64, coeffs: (W, 4) complex128, points: (n, 4)
    float64. Returns (n, 4) complex128.
    """
    n = points.shape[0]
    out = np.empty((n, 4), dtype=np.complex128)
    for start in range(0, n, _CHUNK):
        sl = slice(start, min(start + _CHUNK, n))
        e = np.exp(1j * (points[sl] @ phases.T))
        out[sl] = e @ coeffs
    return out


def superpose_eval_grad(phases, coeffs, points):
    """Values and spacetime gradients of the superposition.

    Returns (values, grads) with values (n, 4) and grads (n, 4, 4), where
    grads[i, mu] is the partial derivative of psi along axis mu at
    points[i]. Derivatives only multiply each wave by i*phases[w, mu], so
    they reuse the same phase matrix.
    """
    n = points.shape[0]
    vals = np.empty((n, 4), dtype=np.complex128)
    grads = np.empty((n, 4, 4), dtype=np.complex128)
    dcoeffs = 1j * phases[:, :, None] * coeffs[:, None, :]  # (W, 4, 4)
    dflat = dcoeffs.reshape(phases.shape[0], 16)
    for start in range(0, n, _CHUNK):
        sl = slice(start, min(start + _CHUNK, n))
        e = np.exp(1j * (points[sl] @ phases.T))
        vals[sl] = e @ coeffs
        grads[sl] = (e @ dflat).reshape(-1, 4, 4)
    return vals, grads
