"""Position ensembles distributed as psi^dag psi, and their statistics.

Three capabilities: draw i.i.d. positions from the density at one time by
rejection sampling, measure how well transported samples match the density
at a later time (total-variation distance on a histogram), and estimate the
probability of near-speed-1 episodes as a function of the closeness
threshold. All randomness flows through one seeded generator per call, so
repeated runs with the same seed reproduce results exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import PSI_FLOOR, ArrayF, current_many
from .dynamics import transport_batch
from .errors import DegenerateDensityError, TooManyLostError
from .models import WaveFunctionModel

#: Rejection sampling scans this many points per axis to bound the density.
SCAN_RESOLUTION = 64

#: Safety factor applied to the scanned density maximum.
ENVELOPE_FACTOR = 1.2

_PROPOSAL_BATCH = 131_072
_MAX_BATCHES = 10_000


@dataclass(frozen=True)
class SamplingRegion:
    """Axis-aligned box with a sample count and an RNG seed."""

    lo: tuple[float, float, float]
    hi: tuple[float, float, float]
    n: int
    seed: int

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != 3 or len(hi) != 3:
            raise ValueError("lo and hi must each have 3 components")
        if not all(a < b for a, b in zip(lo, hi)):
            raise ValueError(f"need lo < hi per axis, got {lo} vs {hi}")
        if self.n < 1:
            raise ValueError(f"sample count must be >= 1, got {self.n!r}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)


@dataclass(frozen=True)
class HistogramSpec:
    """Axis-aligned histogram support with a bin count per axis."""

    lo: tuple[float, float, float]
    hi: tuple[float, float, float]
    bins: tuple[int, int, int]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        bins = tuple(int(b) for b in self.bins)
        if not all(a < b for a, b in zip(lo, hi)):
            raise ValueError(f"need lo < hi per axis, got {lo} vs {hi}")
        if not all(b >= 1 for b in bins):
            raise ValueError("bin counts must be >= 1")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "bins", bins)

    def edges(self) -> list[ArrayF]:
        return [
            np.linspace(self.lo[a], self.hi[a], self.bins[a] + 1) for a in range(3)
        ]


def density_at(model: WaveFunctionModel, t: float, positions: ArrayF) -> ArrayF:
    """psi^dag psi at one time over an (n, 3) batch of positions."""
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    pts = np.empty((positions.shape[0], 4), dtype=np.float64)
    pts[:, 0] = t
    pts[:, 1:] = positions
    vals = model.evaluate_many(pts)
    return np.real(np.sum(np.conjugate(vals) * vals, axis=-1))


def _scan_supremum(model, t, region) -> float:
    axes = [
        np.linspace(region.lo[a], region.hi[a], SCAN_RESOLUTION) for a in range(3)
    ]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    return float(density_at(model, t, grid).max())


def sample_positions(
    model: WaveFunctionModel,
    t1: float,
    region: SamplingRegion,
    degenerate_tol: float = 1e-18,
) -> ArrayF:
    """Draw region.n i.i.d. positions from psi^dag psi(t1, .) on the region.

    Plain rejection sampling against a scanned envelope: exact draws for
    smooth bounded densities, at the cost of a density evaluation per
    proposal. Deterministic for a fixed region.seed.
    """
    sup = _scan_supremum(model, t1, region)
    if not sup > degenerate_tol:
        raise DegenerateDensityError(
            f"scanned density supremum {sup:.3e} is at or below {degenerate_tol:.3e}"
        )
    envelope = ENVELOPE_FACTOR * sup
    rng = np.random.default_rng(region.seed)
    lo = np.asarray(region.lo)
    span = np.asarray(region.hi) - lo
    out = np.empty((region.n, 3), dtype=np.float64)
    filled = 0
    for _ in range(_MAX_BATCHES):
        if filled >= region.n:
            break
        proposals = lo + span * rng.random((_PROPOSAL_BATCH, 3))
        u = rng.random(_PROPOSAL_BATCH)
        accepted = proposals[u * envelope < density_at(model, t1, proposals)]
        take = min(len(accepted), region.n - filled)
        out[filled : filled + take] = accepted[:take]
        filled += take
    if filled < region.n:
        raise DegenerateDensityError(
            f"rejection sampling stalled at {filled}/{region.n} accepted"
        )
    return out


def binned_density(
    model: WaveFunctionModel, t: float, hist: HistogramSpec, gl_points: int = 2
) -> ArrayF:
    """Per-bin probabilities of psi^dag psi(t, .), normalized on the support.

    Each bin is integrated with a tensor-product Gauss-Legendre rule so the
    comparison against a sample histogram carries no midpoint bias.
    """
    nodes, weights = np.polynomial.legendre.leggauss(gl_points)
    axes_nodes = []
    axes_weights = []
    for a in range(3):
        edges = np.linspace(hist.lo[a], hist.hi[a], hist.bins[a] + 1)
        half = 0.5 * (edges[1:] - edges[:-1])
        mid = 0.5 * (edges[1:] + edges[:-1])
        axes_nodes.append((mid[:, None] + half[:, None] * nodes[None, :]).ravel())
        axes_weights.append((half[:, None] * weights[None, :]).ravel())
    grid = np.stack(np.meshgrid(*axes_nodes, indexing="ij"), axis=-1).reshape(-1, 3)
    dens = density_at(model, t, grid)
    w3 = (
        axes_weights[0][:, None, None]
        * axes_weights[1][None, :, None]
        * axes_weights[2][None, None, :]
    )
    g = gl_points
    b = hist.bins
    mass = (dens.reshape(b[0] * g, b[1] * g, b[2] * g) * w3.reshape(
        b[0] * g, b[1] * g, b[2] * g
    )).reshape(b[0], g, b[1], g, b[2], g).sum(axis=(1, 3, 5))
    total = mass.sum()
    if not total > 0:
        raise DegenerateDensityError("density integrates to zero on the histogram")
    return mass / total


@dataclass
class EquivarianceResult:
    distance: float
    lost_fraction: float
    node_lost_count: int
    n_used: int


def equivariance_distance(
    model: WaveFunctionModel,
    samples: ArrayF,
    t1: float,
    t2: float,
    hist: HistogramSpec,
    step: float = 0.02,
    psi_floor: float = PSI_FLOOR,
    lost_tol: float = 0.10,
) -> EquivarianceResult:
    """Total-variation distance between transported samples and the density.

    Samples drawn at t1 are carried to t2 along their trajectories and
    histogrammed; the result is compared with the bin-integrated density at
    t2, both normalized over the histogram support. Trajectories that hit a
    node or end outside the support are excluded and counted; an excluded
    fraction above lost_tol raises TooManyLostError. With t2 == t1 no
    transport happens and the distance is the sampling-plus-binning noise
    floor, the natural control for the transported figure.
    """
    samples = np.asarray(samples, dtype=np.float64).reshape(-1, 3)
    n = samples.shape[0]
    if t2 == t1:
        endpoints = samples
        node_lost = np.zeros(n, dtype=bool)
    else:
        res = transport_batch(model, samples, t1, t2, step, psi_floor)
        endpoints = res.endpoints
        node_lost = res.node_lost
    lo = np.asarray(hist.lo)
    hi = np.asarray(hist.hi)
    outside = ((endpoints < lo) | (endpoints > hi)).any(axis=1)
    lost = node_lost | outside
    lost_fraction = float(lost.mean())
    if lost_fraction > lost_tol:
        raise TooManyLostError(
            f"excluded fraction {lost_fraction:.3f} exceeds {lost_tol:.3f}"
        )
    kept = endpoints[~lost]
    counts, _ = np.histogramdd(kept, bins=hist.edges())
    empirical = counts / counts.sum()
    truth = binned_density(model, t2, hist)
    distance = 0.5 * float(np.abs(empirical - truth).sum())
    return EquivarianceResult(
        distance=distance,
        lost_fraction=lost_fraction,
        node_lost_count=int(node_lost.sum()),
        n_used=int(n - lost.sum()),
    )


@dataclass
class SpeedFractionResult:
    fractions: list[tuple[float, float]]  # (epsilon, fraction)
    near_node_count: int
    n_used: int
    max_speed: float


def speed_c_fraction(
    model: WaveFunctionModel,
    t1: float,
    t2: float,
    region: SamplingRegion,
    epsilons: list[float],
    step: float = 0.02,
    psi_floor: float = PSI_FLOOR,
) -> SpeedFractionResult:
    """Fraction of sampled trajectories whose speed reaches 1 - epsilon.

    Thresholding one max-speed array at every epsilon makes the fractions
    monotone non-decreasing in epsilon by construction.
    """
    for eps in epsilons:
        if not 0.0 < eps < 1.0:
            raise ValueError(f"epsilons must lie in (0, 1), got {eps!r}")
    samples = sample_positions(model, t1, region)
    res = transport_batch(model, samples, t1, t2, step, psi_floor)
    alive = ~res.node_lost
    n_used = int(alive.sum())
    if n_used == 0:
        raise TooManyLostError("every sampled trajectory hit a node")
    speeds = res.max_speeds[alive]
    fractions = [
        (float(eps), float(np.mean(speeds >= 1.0 - eps))) for eps in epsilons
    ]
    return SpeedFractionResult(
        fractions=fractions,
        near_node_count=int(res.node_lost.sum()),
        n_used=n_used,
        max_speed=float(speeds.max()),
    )


@dataclass
class EnsembleReport:
    """Aggregated result of one ensemble run."""

    n_requested: int
    n_accepted: int
    near_node_count: int
    speed_c_fractions: list[tuple[float, float]]
    equivariance: list[dict]  # one record per evaluation time
    max_speed: float


def run_ensemble(
    model: WaveFunctionModel,
    t1: float,
    t2: float,
    region: SamplingRegion,
    epsilons: list[float],
    hist: HistogramSpec,
    step: float = 0.02,
    psi_floor: float = PSI_FLOOR,
    lost_tol: float = 0.10,
) -> EnsembleReport:
    """Sample once, transport once, and report fractions plus equivariance.

    The control distance (no transport) and the transported distance use
    the same sample set, so their ratio isolates what the transport itself
    contributes.
    """
    for eps in epsilons:
        if not 0.0 < eps < 1.0:
            raise ValueError(f"epsilons must lie in (0, 1), got {eps!r}")
    if not t2 > t1:
        raise ValueError("need t2 > t1")
    samples = sample_positions(model, t1, region)
    control = equivariance_distance(
        model, samples, t1, t1, hist, step, psi_floor, lost_tol
    )
    res = transport_batch(model, samples, t1, t2, step, psi_floor)
    lo = np.asarray(hist.lo)
    hi = np.asarray(hist.hi)
    outside = ((res.endpoints < lo) | (res.endpoints > hi)).any(axis=1)
    lost = res.node_lost | outside
    lost_fraction = float(lost.mean())
    if lost_fraction > lost_tol:
        raise TooManyLostError(
            f"excluded fraction {lost_fraction:.3f} exceeds {lost_tol:.3f}"
        )
    counts, _ = np.histogramdd(res.endpoints[~lost], bins=hist.edges())
    empirical = counts / counts.sum()
    truth = binned_density(model, t2, hist)
    distance = 0.5 * float(np.abs(empirical - truth).sum())
    alive = ~res.node_lost
    speeds = res.max_speeds[alive]
    fractions = [
        (float(eps), float(np.mean(speeds >= 1.0 - eps))) for eps in epsilons
    ]
    return EnsembleReport(
        n_requested=region.n,
        n_accepted=region.n,
        near_node_count=int(res.node_lost.sum()),
        speed_c_fractions=fractions,
        equivariance=[
            {
                "t": t1,
                "distance": control.distance,
                "lost_fraction": control.lost_fraction,
                "n_used": control.n_used,
            },
            {
                "t": t2,
                "distance": distance,
                "lost_fraction": lost_fraction,
                "n_used": int((~lost).sum()),
            },
        ],
        max_speed=float(speeds.max()) if speeds.size else 0.0,
    )
