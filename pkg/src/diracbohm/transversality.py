"""Locate and classify the lightlike-current set of a model in a box.

The constraint map F(x) = (s, p)(psi(x)) cuts out the set where guidance
reaches speed 1. The map (s, p) on nonzero spinors is a submersion (both
singular values of its real 8-column Jacobian equal 2|psi|), so full rank
of the composed 2x4 spacetime Jacobian certifies a transverse, codimension-2
crossing. The margin of a located point is the second singular value of
that Jacobian after dividing by psi^dag psi, which makes every threshold in
this module invariant under rescaling the model.

Verdicts for a compact box:
  Degenerate       more than a set fraction of grid points lies on the
                   constraint set to rounding accuracy (open, 4-d case)
  Empty            no constraint zeros found
  TransverseCodim2 every located zero has margin above tolerance
  MarginBelowTol   zeros exist but at least one margin is not resolvable
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .algebra import (
    ArrayF,
    GAMMA0,
    IG0G5,
    PSI_FLOOR,
    lorentz_invariants,
    norm_squared,
    s_deviation_many,
)
from .errors import ZeroSpinorError
from .models import (
    PlaneWaveSuperposition,
    SumModel,
    WaveFunctionModel,
    spanning_waves,
)

#: Newton accepts a point when the scale-free residual drops below this.
NEWTON_TOL = 1e-12

#: Transverse margins below this count as unresolved.
MARGIN_TOL = 1e-8

#: Grid points with scale-free residual below this count as degenerate.
DEGENERATE_TOL = 1e-10

#: Degenerate verdict requires more than this fraction of degenerate points.
DEGENERATE_CELL_FRACTION = 0.01

#: Cells are seeded when their corner minimum dips below
#: seed factor * corner spread + a small absolute floor.
_SEED_SPREAD_FACTOR = 1.5


@dataclass(frozen=True)
class CompactBox:
    """Spacetime box [t1, t2] x [lo, hi] with a per-axis grid resolution."""

    t_span: tuple[float, float]
    lo: tuple[float, float, float]
    hi: tuple[float, float, float]
    resolution: tuple[int, int, int, int] = (17, 17, 17, 17)

    def __post_init__(self):
        t1, t2 = (float(v) for v in self.t_span)
        if not t1 < t2:
            raise ValueError(f"need t1 < t2, got {self.t_span!r}")
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != 3 or len(hi) != 3 or not all(a < b for a, b in zip(lo, hi)):
            raise ValueError(f"need lo < hi per axis, got {lo} vs {hi}")
        res = tuple(int(r) for r in self.resolution)
        if len(res) != 4 or any(r < 2 for r in res):
            raise ValueError(f"resolution must be 4 values >= 2, got {res}")
        object.__setattr__(self, "t_span", (t1, t2))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "resolution", res)

    def axes(self) -> list[ArrayF]:
        bounds = [self.t_span, *zip(self.lo, self.hi)]
        return [
            np.linspace(b[0], b[1], r) for b, r in zip(bounds, self.resolution)
        ]

    def corners(self) -> tuple[ArrayF, ArrayF]:
        return (
            np.array([self.t_span[0], *self.lo]),
            np.array([self.t_span[1], *self.hi]),
        )


@dataclass(frozen=True)
class SigmaPoint:
    """A located constraint zero with its transversality diagnostics.

    residual is the raw |(s, p)| at the point; s_dev is the scale-free
    version that Newton converged on. margin and sigma1 are the singular
    values of the 2x4 constraint Jacobian divided by psi^dag psi.
    """

    x: ArrayF
    residual: float
    s_dev: float
    margin: float
    sigma1: float
    psi_norm_squared: float


@dataclass
class LocateResult:
    points: list[SigmaPoint]
    seed_count: int
    converged_count: int
    failed_count: int
    degenerate_fraction: float
    grid_size: int


@dataclass
class TransversalityReport:
    verdict: str
    points: list[SigmaPoint]
    min_margin: float | None
    seed_count: int
    converged_count: int
    failed_count: int
    degenerate_fraction: float
    grid_size: int


def constraint_value(
    model: WaveFunctionModel, x: ArrayF, psi_floor: float = PSI_FLOOR
) -> tuple[float, float]:
    """(s, p) of the model at one event; raises where psi is floored."""
    psi = model.evaluate(x)
    if norm_squared(psi) <= psi_floor:
        raise ZeroSpinorError(f"model is at a node at {np.asarray(x)!r}")
    return lorentz_invariants(psi)


def _constraint_rows(vals, grads):
    """F (n, 2), Jacobian (n, 2, 4) and psi^dag psi (n,) from batch output."""
    c = np.conjugate(vals)
    f = np.empty(vals.shape[:-1] + (2,))
    f[..., 0] = np.real(np.einsum("...s,st,...t->...", c, GAMMA0, vals))
    f[..., 1] = np.real(np.einsum("...s,st,...t->...", c, IG0G5, vals))
    jac = np.empty(vals.shape[:-1] + (2, 4))
    jac[..., 0, :] = 2.0 * np.real(
        np.einsum("...s,st,...mt->...m", c, GAMMA0, grads)
    )
    jac[..., 1, :] = 2.0 * np.real(
        np.einsum("...s,st,...mt->...m", c, IG0G5, grads)
    )
    rho = np.real(np.sum(c * vals, axis=-1))
    return f, jac, rho


def constraint_jacobian(model: WaveFunctionModel, x: ArrayF) -> ArrayF:
    """2x4 spacetime Jacobian of (s, p) composed with the model at one event."""
    x = np.asarray(x, dtype=np.float64).reshape(1, 4)
    vals, grads = model.evaluate_with_gradient_many(x)
    _, jac, _ = _constraint_rows(vals, grads)
    return jac[0]


def _grid_points(box: CompactBox) -> ArrayF:
    mesh = np.meshgrid(*box.axes(), indexing="ij")
    return np.stack(mesh, axis=-1).reshape(-1, 4)


def _grid_scan(model, box, psi_floor):
    """Scale-free residual at every grid point, shaped like the grid."""
    pts = _grid_points(box)
    vals = model.evaluate_many(pts)
    sdev = s_deviation_many(vals, psi_floor)
    return sdev.reshape(box.resolution)


def _seed_points(box: CompactBox, sdev_grid: ArrayF, newton_tol: float) -> ArrayF:
    """Cell centers whose corner residuals make a zero inside plausible."""
    cmin = sdev_grid
    cmax = sdev_grid
    for axis in range(4):
        lower = [slice(None)] * 4
        upper = [slice(None)] * 4
        lower[axis] = slice(None, -1)
        upper[axis] = slice(1, None)
        cmin = np.minimum(cmin[tuple(lower)], cmin[tuple(upper)])
        cmax = np.maximum(cmax[tuple(lower)], cmax[tuple(upper)])
    spread = cmax - cmin
    threshold = _SEED_SPREAD_FACTOR * spread + max(10.0 * newton_tol, 1e-13)
    idx = np.argwhere(cmin < threshold)
    if idx.size == 0:
        return np.empty((0, 4))
    centers = [0.5 * (a[:-1] + a[1:]) for a in box.axes()]
    return np.column_stack([centers[d][idx[:, d]] for d in range(4)])


def _dedup(points: ArrayF, order: ArrayF, tol: float) -> np.ndarray:
    """Indices of representatives after rounding-grid deduplication."""
    keys = np.round(points / tol).astype(np.int64)
    seen: dict[tuple, int] = {}
    keep = []
    for i in order:
        key = tuple(keys[i])
        if key not in seen:
            seen[key] = i
            keep.append(i)
    return np.asarray(keep, dtype=np.int64)


def _locate(
    model: WaveFunctionModel,
    box: CompactBox,
    newton_tol: float,
    max_iter: int,
    psi_floor: float,
    degenerate_tol: float,
) -> LocateResult:
    sdev_grid = _grid_scan(model, box, psi_floor)
    finite = sdev_grid[np.isfinite(sdev_grid)]
    degenerate_fraction = (
        float(np.mean(finite < degenerate_tol)) if finite.size else 0.0
    )
    seeds = _seed_points(box, sdev_grid, newton_tol)
    lo4, hi4 = box.corners()
    n = seeds.shape[0]
    x = seeds.copy()
    status = np.zeros(n, dtype=np.int8)  # 0 active, 1 converged, 2 failed
    for _ in range(max_iter):
        idx = np.flatnonzero(status == 0)
        if idx.size == 0:
            break
        vals, grads = model.evaluate_with_gradient_many(x[idx])
        f, jac, rho = _constraint_rows(vals, grads)
        dead = rho <= psi_floor
        status[idx[dead]] = 2
        sdev = np.full(rho.shape, np.inf)
        np.divide(np.hypot(f[:, 0], f[:, 1]), rho, out=sdev, where=~dead)
        done = ~dead & (sdev < newton_tol)
        status[idx[done]] = 1
        step_rows = ~dead & ~done
        if not step_rows.any():
            continue
        # Minimum-norm Newton update on the underdetermined 2x4 system.
        pinv = np.linalg.pinv(jac[step_rows], rcond=1e-10)
        delta = -(pinv @ f[step_rows, :, None])[..., 0]
        moved = np.clip(x[idx[step_rows]] + delta, lo4, hi4)
        x[idx[step_rows]] = moved
    converged = np.flatnonzero(status == 1)
    points: list[SigmaPoint] = []
    if converged.size:
        tol = min(
            (b[1] - b[0]) / (r - 1)
            for b, r in zip(
                [box.t_span, *zip(box.lo, box.hi)], box.resolution
            )
        ) * 0.5
        keep = _dedup(x, converged, tol)
        vals, grads = model.evaluate_with_gradient_many(x[keep])
        f, jac, rho = _constraint_rows(vals, grads)
        sv = np.linalg.svd(jac, compute_uv=False)
        for i in range(len(keep)):
            points.append(
                SigmaPoint(
                    x=x[keep[i]].copy(),
                    residual=float(np.hypot(f[i, 0], f[i, 1])),
                    s_dev=float(np.hypot(f[i, 0], f[i, 1]) / rho[i]),
                    margin=float(sv[i, 1] / rho[i]),
                    sigma1=float(sv[i, 0] / rho[i]),
                    psi_norm_squared=float(rho[i]),
                )
            )
    return LocateResult(
        points=points,
        seed_count=n,
        converged_count=int(converged.size),
        failed_count=int(n - converged.size),
        degenerate_fraction=degenerate_fraction,
        grid_size=int(np.prod(box.resolution)),
    )


def locate_sigma(
    model: WaveFunctionModel,
    box: CompactBox,
    newton_tol: float = NEWTON_TOL,
    max_iter: int = 25,
    psi_floor: float = PSI_FLOOR,
) -> list[SigmaPoint]:
    """Deduplicated constraint zeros found by seeded Newton runs in the box."""
    return _locate(
        model, box, newton_tol, max_iter, psi_floor, DEGENERATE_TOL
    ).points


def transversality_report(
    model: WaveFunctionModel,
    box: CompactBox,
    newton_tol: float = NEWTON_TOL,
    margin_tol: float = MARGIN_TOL,
    degenerate_tol: float = DEGENERATE_TOL,
    degenerate_cell_fraction: float = DEGENERATE_CELL_FRACTION,
    max_iter: int = 25,
    psi_floor: float = PSI_FLOOR,
) -> TransversalityReport:
    """Classify the constraint set of the model inside the box."""
    res = _locate(model, box, newton_tol, max_iter, psi_floor, degenerate_tol)
    margins = [p.margin for p in res.points]
    if res.degenerate_fraction > degenerate_cell_fraction:
        verdict = "Degenerate"
    elif not res.points:
        verdict = "Empty"
    elif all(
        p.psi_norm_squared > psi_floor and p.margin > margin_tol
        for p in res.points
    ):
        verdict = "TransverseCodim2"
    else:
        verdict = "MarginBelowTol"
    return TransversalityReport(
        verdict=verdict,
        points=res.points,
        min_margin=min(margins) if margins else None,
        seed_count=res.seed_count,
        converged_count=res.converged_count,
        failed_count=res.failed_count,
        degenerate_fraction=res.degenerate_fraction,
        grid_size=res.grid_size,
    )


def _rank_from_singular_values(sigma1: float, margin: float) -> int:
    """Numerical rank of the 2x4 Jacobian from its two singular values."""
    cutoff = 4 * np.finfo(np.float64).eps * sigma1
    return int(sigma1 > 0.0) + int(margin > cutoff)


@dataclass
class PerturbationTrial:
    verdict: str
    min_margin: float | None
    n_points: int
    degenerate_fraction: float
    all_rank_two: bool


@dataclass
class PerturbationStatistics:
    amplitude: float
    wavenumber: float
    trials: list[PerturbationTrial]
    fraction_transverse: float
    base_degenerate_fraction: float


def perturb_and_compare(
    model: WaveFunctionModel,
    amplitude: float,
    trials: int,
    box: CompactBox,
    seed: int,
    wavenumber: float = 1.0,
    newton_tol: float = NEWTON_TOL,
    margin_tol: float = MARGIN_TOL,
    degenerate_tol: float = DEGENERATE_TOL,
    degenerate_cell_fraction: float = DEGENERATE_CELL_FRACTION,
    max_iter: int = 25,
    psi_floor: float = PSI_FLOOR,
) -> PerturbationStatistics:
    """Add small random four-wave perturbations and reclassify per trial.

    Coefficients are i.i.d. standard complex Gaussians scaled by amplitude
    (real and imaginary parts N(0, 1/2) each). The degenerate grid fraction
    before and after measures how an open constraint set collapses under
    generic perturbation.
    """
    if amplitude < 0:
        raise ValueError("amplitude must be >= 0")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    base_sdev = _grid_scan(model, box, psi_floor)
    finite = base_sdev[np.isfinite(base_sdev)]
    base_fraction = float(np.mean(finite < degenerate_tol)) if finite.size else 0.0
    rng = np.random.default_rng(seed)
    out: list[PerturbationTrial] = []
    for _ in range(trials):
        raw = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        coeffs = amplitude * raw / np.sqrt(2.0)
        pert = PlaneWaveSuperposition(
            spanning_waves(wavenumber, coeffs), model.mass
        )
        report = transversality_report(
            SumModel([model, pert]),
            box,
            newton_tol=newton_tol,
            margin_tol=margin_tol,
            degenerate_tol=degenerate_tol,
            degenerate_cell_fraction=degenerate_cell_fraction,
            max_iter=max_iter,
            psi_floor=psi_floor,
        )
        all_rank_two = bool(report.points) and all(
            _rank_from_singular_values(p.sigma1, p.margin) == 2
            for p in report.points
        )
        out.append(
            PerturbationTrial(
                verdict=report.verdict,
                min_margin=report.min_margin,
                n_points=len(report.points),
                degenerate_fraction=report.degenerate_fraction,
                all_rank_two=all_rank_two,
            )
        )
    fraction = sum(t.verdict == "TransverseCodim2" for t in out) / len(out)
    return PerturbationStatistics(
        amplitude=float(amplitude),
        wavenumber=float(wavenumber),
        trials=out,
        fraction_transverse=float(fraction),
        base_degenerate_fraction=base_fraction,
    )
