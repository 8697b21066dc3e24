"""Dirac matrix algebra and pointwise spinor functionals.

Natural units hbar = c = 1 throughout; all speeds are in units of c. The
alpha matrices are fixed in the Dirac representation and gamma5 is the
off-diagonal (I, I) block matrix, so every functional below reduces to an
explicit 4x4 bilinear form.

Conventions for the two Lorentz invariants of a spinor psi:

    s = psibar psi        = psi^dag gamma0 psi
    p = i psibar gamma5 psi = psi^dag (i gamma0 gamma5) psi

Both are real. They satisfy j.j = s^2 + p^2 where j is the probability
current, so a nonzero spinor gives a lightlike current (guidance speed
exactly 1) precisely when (s, p) = (0, 0).

All values are immutable after construction and every function is pure, so
unrestricted concurrent use is safe.
"""
from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from .errors import NearNodeError, NotUnitError, ZeroSpinorError

ArrayC = NDArray[np.complex128]
ArrayF = NDArray[np.float64]

#: Guidance-law evaluations refuse spinors with psi^dag psi at or below this.
PSI_FLOOR = 1e-24

#: Tolerance for |omega| = 1 checks on direction vectors.
UNIT_TOL = 1e-12

_SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
_SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
_I2 = np.eye(2, dtype=np.complex128)
_Z2 = np.zeros((2, 2), dtype=np.complex128)


def _offdiag(block: ArrayC) -> ArrayC:
    return np.block([[_Z2, block], [block, _Z2]])


ALPHA_X = _offdiag(_SIGMA_X)
ALPHA_Y = _offdiag(_SIGMA_Y)
ALPHA_Z = _offdiag(_SIGMA_Z)
#: The velocity matrices, index order (x, y, z).
ALPHA = (ALPHA_X, ALPHA_Y, ALPHA_Z)

GAMMA0 = np.block([[_I2, _Z2], [_Z2, -_I2]])
GAMMA5 = _offdiag(_I2)
#: gamma^mu = gamma0 * (I, alpha), index order (t, x, y, z).
GAMMA = (GAMMA0, GAMMA0 @ ALPHA_X, GAMMA0 @ ALPHA_Y, GAMMA0 @ ALPHA_Z)

# Hermitian kernels of the invariant bilinears: s = psi^dag GAMMA0 psi and
# p = psi^dag IG0G5 psi. i*(gamma0 gamma5) is Hermitian because gamma0 and
# gamma5 anticommute.
IG0G5 = 1j * (GAMMA0 @ GAMMA5)

for _m in (*ALPHA, GAMMA0, GAMMA5, IG0G5):
    _m.setflags(write=False)


def norm_squared(psi: ArrayC) -> float:
    """psi^dag psi of a single spinor."""
    psi = np.asarray(psi, dtype=np.complex128)
    return float(np.real(np.vdot(psi, psi)))


def current(psi: ArrayC) -> ArrayF:
    """Probability four-current (psi^dag psi, psi^dag alpha psi).

    Defined for every spinor including zero; the result is real because
    each bilinear kernel is Hermitian.
    """
    psi = np.asarray(psi, dtype=np.complex128)
    c = np.conjugate(psi)
    return np.array(
        [
            np.real(c @ psi),
            np.real(c @ (ALPHA_X @ psi)),
            np.real(c @ (ALPHA_Y @ psi)),
            np.real(c @ (ALPHA_Z @ psi)),
        ]
    )


def current_many(psis: ArrayC) -> ArrayF:
    """current() over an (..., 4) stack of spinors, returning (..., 4)."""
    psis = np.asarray(psis, dtype=np.complex128)
    c = np.conjugate(psis)
    out = np.empty(psis.shape[:-1] + (4,), dtype=np.float64)
    out[..., 0] = np.real(np.sum(c * psis, axis=-1))
    for k, a in enumerate(ALPHA, start=1):
        out[..., k] = np.real(np.einsum("...s,st,...t->...", c, a, psis))
    return out


def bohm_velocity(psi: ArrayC, psi_floor: float = PSI_FLOOR) -> ArrayF:
    """Guidance velocity: spatial current over psi^dag psi, in units of c."""
    j = current(psi)
    if j[0] <= psi_floor:
        raise NearNodeError(
            f"psi^dag psi = {j[0]:.3e} is at or below the floor {psi_floor:.3e}"
        )
    return j[1:] / j[0]


def lorentz_invariants(psi: ArrayC) -> tuple[float, float]:
    """The pair (s, p) of real Lorentz invariants of one spinor."""
    psi = np.asarray(psi, dtype=np.complex128)
    c = np.conjugate(psi)
    s = np.real(c @ (GAMMA0 @ psi))
    p = np.real(c @ (IG0G5 @ psi))
    return float(s), float(p)


def lorentz_invariants_many(psis: ArrayC) -> ArrayF:
    """(s, p) over an (..., 4) stack of spinors, returning (..., 2)."""
    psis = np.asarray(psis, dtype=np.complex128)
    c = np.conjugate(psis)
    out = np.empty(psis.shape[:-1] + (2,), dtype=np.float64)
    out[..., 0] = np.real(np.einsum("...s,st,...t->...", c, GAMMA0, psis))
    out[..., 1] = np.real(np.einsum("...s,st,...t->...", c, IG0G5, psis))
    return out


def s_deviation(psi: ArrayC) -> float:
    """Scale-free proximity to the lightlike set: sqrt(s^2 + p^2) / psi^dag psi.

    Satisfies s_deviation(psi)^2 = 1 - |bohm_velocity(psi)|^2, so it is zero
    exactly when the guidance speed is 1, and it is invariant under
    psi -> lambda psi for lambda != 0.
    """
    n2 = norm_squared(psi)
    if not n2 > 0.0:
        raise ZeroSpinorError("s_deviation is undefined for the zero spinor")
    s, p = lorentz_invariants(psi)
    return float(np.hypot(s, p)) / n2


def s_deviation_many(psis: ArrayC, psi_floor: float = 0.0) -> ArrayF:
    """s_deviation over a stack of spinors; +inf where psi^dag psi <= floor.

    Mapping near-zero spinors to +inf keeps threshold comparisons meaningful
    on grids that may contain nodes: an untrustworthy point never looks close
    to the lightlike set.
    """
    psis = np.asarray(psis, dtype=np.complex128)
    n2 = np.real(np.sum(np.conjugate(psis) * psis, axis=-1))
    sp = lorentz_invariants_many(psis)
    res = np.hypot(sp[..., 0], sp[..., 1])
    out = np.full(n2.shape, np.inf)
    ok = n2 > psi_floor
    np.divide(res, n2, out=out, where=ok)
    return out


def minkowski_norm_squared(v: ArrayF) -> ArrayF | float:
    """(v0)^2 - |spatial|^2 with metric diag(1, -1, -1, -1); broadcasts."""
    v = np.asarray(v, dtype=np.float64)
    out = v[..., 0] ** 2 - np.sum(v[..., 1:] ** 2, axis=-1)
    return float(out) if out.ndim == 0 else out


def _checked_direction(omega: ArrayF) -> ArrayF:
    omega = np.asarray(omega, dtype=np.float64).reshape(3)
    n = float(np.linalg.norm(omega))
    if abs(n - 1.0) > UNIT_TOL:
        raise NotUnitError(f"|omega| = {n!r} deviates from 1 beyond {UNIT_TOL}")
    return omega


def alpha_omega(omega: ArrayF) -> ArrayC:
    """Velocity matrix along a unit direction: omega . alpha."""
    omega = _checked_direction(omega)
    return omega[0] * ALPHA_X + omega[1] * ALPHA_Y + omega[2] * ALPHA_Z


def eigen_projector(omega: ArrayF, sign: int) -> ArrayC:
    """Orthogonal projector (I + sign*alpha_omega)/2 onto a speed-1 eigenspace.

    Every nonzero spinor fixed by the sign=+1 projector has guidance
    velocity exactly omega (and the sign=-1 one gives -omega); each
    projector has rank 2.
    """
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign!r}")
    return 0.5 * (np.eye(4, dtype=np.complex128) + sign * alpha_omega(omega))
