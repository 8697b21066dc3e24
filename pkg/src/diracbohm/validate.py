"""Runtime self-checks for the algebraic backbone of the package.

The checks recompute every identity the simulation relies on, for a matrix
set passed in explicitly. Passing a deliberately corrupted set (say, a sign
error in gamma5) must flip the current-identity check to FAIL; that is the
point of taking the matrices as a parameter instead of trusting the module
constants.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import algebra, models
from .algebra import ArrayC, ArrayF


@dataclass(frozen=True)
class DiracMatrices:
    """The alpha triple plus gamma0 and gamma5 used to form all bilinears."""

    alpha: tuple[ArrayC, ArrayC, ArrayC]
    gamma0: ArrayC
    gamma5: ArrayC

    @classmethod
    def default(cls) -> "DiracMatrices":
        return cls(alpha=algebra.ALPHA, gamma0=algebra.GAMMA0, gamma5=algebra.GAMMA5)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _bilinear(psi: ArrayC, m: ArrayC) -> ArrayF:
    # psi has shape (n, 4); returns Re(psi^dag m psi) per row
    return np.einsum("ns,st,nt->n", psi.conj(), m, psi).real


def _bilinear_imag(psi: ArrayC, m: ArrayC) -> ArrayF:
    return np.abs(np.einsum("ns,st,nt->n", psi.conj(), m, psi).imag)


def _current_parts(psi: ArrayC, mats: DiracMatrices):
    j0 = np.einsum("ns,ns->n", psi.conj(), psi).real
    jk = np.stack([_bilinear(psi, a) for a in mats.alpha], axis=-1)
    ig0g5 = 1j * (mats.gamma0 @ mats.gamma5)
    s = _bilinear(psi, mats.gamma0)
    p = _bilinear(psi, ig0g5)
    return j0, jk, s, p


def _check_anticommutation(mats: DiracMatrices) -> CheckResult:
    eye = np.eye(4)
    worst = 0.0
    for i in range(3):
        for j in range(3):
            d = mats.alpha[i] @ mats.alpha[j] + mats.alpha[j] @ mats.alpha[i]
            worst = max(worst, np.abs(d - 2.0 * (i == j) * eye).max())
        d = mats.alpha[i] @ mats.gamma0 + mats.gamma0 @ mats.alpha[i]
        worst = max(worst, np.abs(d).max())
    worst = max(worst, np.abs(mats.gamma0 @ mats.gamma0 - eye).max())
    worst = max(worst, np.abs(mats.gamma5 @ mats.gamma5 - eye).max())
    worst = max(
        worst, np.abs(mats.gamma0 @ mats.gamma5 + mats.gamma5 @ mats.gamma0).max()
    )
    ok = worst < 1e-14
    return CheckResult("anticommutation", ok, f"max defect {worst:.3e}")


def _check_current_identity(psi: ArrayC, mats: DiracMatrices) -> CheckResult:
    j0, jk, s, p = _current_parts(psi, mats)
    jj = j0**2 - np.einsum("nk,nk->n", jk, jk)
    scale = j0**2
    defect = np.abs(jj - (s**2 + p**2)) / scale
    causal = jj / scale
    ok = defect.max() < 1e-10 and causal.min() >= -1e-12 and j0.min() >= 0.0
    return CheckResult(
        "current-identity",
        ok,
        f"max rel defect {defect.max():.3e}, min rel j.j {causal.min():.3e} "
        f"over {len(psi)} spinors",
    )


def _check_causal_speed(psi: ArrayC, mats: DiracMatrices) -> CheckResult:
    j0, jk, _, _ = _current_parts(psi, mats)
    speed = np.linalg.norm(jk, axis=-1) / j0
    ok = speed.max() <= 1.0 + 1e-12
    return CheckResult("causal-speed", ok, f"max speed {speed.max():.17g}")


def _check_realness(psi: ArrayC, mats: DiracMatrices) -> CheckResult:
    ig0g5 = 1j * (mats.gamma0 @ mats.gamma5)
    worst = 0.0
    for m in (*mats.alpha, mats.gamma0, ig0g5):
        norm = np.einsum("ns,ns->n", psi.conj(), psi).real
        worst = max(worst, (_bilinear_imag(psi, m) / np.maximum(norm, 1.0)).max())
    ok = worst < 1e-13
    return CheckResult("bilinear-realness", ok, f"max rel imaginary part {worst:.3e}")


def _check_eigenspace(rng: np.random.Generator, mats: DiracMatrices) -> CheckResult:
    worst_v = 0.0
    worst_sdev = 0.0
    worst_proj = 0.0
    for _ in range(100):
        omega = rng.standard_normal(3)
        omega /= np.linalg.norm(omega)
        a_om = sum(w * a for w, a in zip(omega, mats.alpha))
        plus = 0.5 * (np.eye(4) + a_om)
        minus = 0.5 * (np.eye(4) - a_om)
        worst_proj = max(
            worst_proj,
            np.abs(plus @ plus - plus).max(),
            np.abs(plus + minus - np.eye(4)).max(),
            np.abs(np.trace(plus).real - 2.0),
        )
        xi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        psi = plus @ xi
        j0, jk, s, p = _current_parts(psi[None, :], mats)
        v = jk[0] / j0[0]
        worst_v = max(worst_v, np.abs(v - omega).max())
        worst_sdev = max(worst_sdev, np.sqrt(s[0] ** 2 + p[0] ** 2) / j0[0])
    ok = worst_v < 1e-10 and worst_sdev < 1e-10 and worst_proj < 1e-12
    return CheckResult(
        "eigenspace-velocity",
        ok,
        f"max |v - omega| {worst_v:.3e}, max sDeviation {worst_sdev:.3e}",
    )


def _check_library_consistency(psi: ArrayC, mats: DiracMatrices) -> CheckResult:
    sub = psi[:1000]
    j0, jk, s, p = _current_parts(sub, mats)
    lib_j = algebra.current_many(sub)
    sp = algebra.lorentz_invariants_many(sub)
    lib_s, lib_p = sp[:, 0], sp[:, 1]
    scale = np.maximum(j0, 1.0)
    worst = max(
        (np.abs(lib_j[:, 0] - j0) / scale).max(),
        (np.abs(lib_j[:, 1:] - jk) / scale[:, None]).max(),
        (np.abs(lib_s - s) / scale).max(),
        (np.abs(lib_p - p) / scale).max(),
    )
    ok = worst < 1e-13
    return CheckResult(
        "library-consistency", ok, f"max rel gap vs library bilinears {worst:.3e}"
    )


def _check_plane_wave_residual(rng: np.random.Generator) -> CheckResult:
    worst = 0.0
    for _ in range(10):
        k = rng.standard_normal(3)
        mass = float(rng.uniform(0.0, 2.0))
        branch = int(rng.integers(1, 3))
        model = models.plane_wave(k, branch=branch, mass=mass)
        pts = np.concatenate(
            [rng.uniform(-2, 2, (10, 1)), rng.uniform(-3, 3, (10, 3))], axis=1
        )
        for x in pts:
            worst = max(worst, models.dirac_residual(model, x))
    ok = worst < 1e-10
    return CheckResult("plane-wave-residual", ok, f"max residual {worst:.3e}")


def _check_four_wave_independence(rng: np.random.Generator) -> CheckResult:
    fam = [
        models.PlaneWaveSuperposition([spec], 1.0)
        for spec in models.spanning_waves(1.0)
    ]
    events = np.concatenate(
        [rng.uniform(-2, 2, (100, 1)), rng.uniform(-4, 4, (100, 3))], axis=1
    )
    cols = np.stack([m.evaluate_many(events) for m in fam], axis=-1)
    sv = np.linalg.svd(cols, compute_uv=False)
    mn = sv[:, -1].min()
    ok = mn > 1e-6
    return CheckResult(
        "four-wave-independence", ok, f"min singular value {mn:.6f} over 100 events"
    )


def _check_gradient_fd(rng: np.random.Generator) -> CheckResult:
    cases = [
        models.CircularWave(1.3),
        models.PlaneWaveSuperposition(
            [
                models.PlaneWaveSpec((0.4, -0.2, 0.9), 1, 1.0 + 0.5j),
                models.PlaneWaveSpec((-1.1, 0.3, 0.2), 2, 0.7 - 0.3j),
            ],
            0.8,
        ),
        models.gaussian_packet(
            center=(0.0, 0.0, 1.0),
            width=0.4,
            branch=1,
            quad=models.QuadratureSpec(nodes_per_axis=3, radius=1.0),
        ),
    ]
    h = 1e-6
    worst = 0.0
    for model in cases:
        pts = rng.uniform(-1.5, 1.5, (25, 4))
        vals, grads = model.evaluate_with_gradient_many(pts)
        scale = max(np.abs(grads).max(), 1e-30)
        for mu in range(4):
            step = np.zeros(4)
            step[mu] = h
            fd = (model.evaluate_many(pts + step) - model.evaluate_many(pts - step)) / (
                2 * h
            )
            worst = max(worst, np.abs(fd - grads[:, mu, :]).max() / scale)
    ok = worst < 1e-6
    return CheckResult("gradient-fd", ok, f"max rel gradient error {worst:.3e}")


def run_checks(
    matrices: DiracMatrices | None = None,
    seed: int = 20260814,
    n_sweep: int = 100_000,
) -> list[CheckResult]:
    """Run all self-checks; returns one result per check, order fixed."""
    mats = DiracMatrices.default() if matrices is None else matrices
    rng = np.random.default_rng(seed)
    psi = rng.standard_normal((n_sweep, 4)) + 1j * rng.standard_normal((n_sweep, 4))
    results = [
        _check_anticommutation(mats),
        _check_current_identity(psi, mats),
        _check_causal_speed(psi, mats),
        _check_realness(psi, mats),
        _check_eigenspace(rng, mats),
        _check_library_consistency(psi, mats),
        _check_plane_wave_residual(rng),
        _check_four_wave_independence(rng),
        _check_gradient_fd(rng),
    ]
    return results


def format_results(results: list[CheckResult]) -> str:
    lines = []
    for r in results:
        tag = "PASS" if r.passed else "FAIL"
        lines.append(f"{tag}  {r.name}: {r.detail}")
    n_bad = sum(not r.passed for r in results)
    lines.append(
        f"{len(results) - n_bad}/{len(results)} checks passed"
        if n_bad
        else f"all {len(results)} checks passed"
    )
    return "\n".join(lines)
