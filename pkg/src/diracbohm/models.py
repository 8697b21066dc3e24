"""Closed-form solutions of the free Dirac equation with analytic gradients.

Events are plain length-4 float arrays ordered (t, x, y, z). Every model
maps batches of events, shape (n, 4), to spinor batches, shape (n, 4)
complex, and exposes the exact spacetime gradient, shape (n, 4, 4) with
grads[i, mu] the partial derivative along axis mu.

Phase convention. A positive-energy plane wave with wave vector k and
energy k0 = sqrt(mass^2 + |k|^2) is implemented as

    psi(x) = u(k, branch) * exp(+i * (k0 t + k . q))

This is the sign for which i gamma^mu d_mu psi = m psi holds identically
with the spinor columns used below (the opposite sign leaves a residual of
size 2m). A consequence worth remembering: the guidance velocity of a
single wave is -k/k0, antiparallel to the wave vector. Downstream code
never assumes "k points along the motion"; it always asks bohm_velocity.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import _kernels
from .algebra import (
    ArrayC,
    ArrayF,
    GAMMA,
    eigen_projector,
    norm_squared,
)
from .errors import (
    MixedMassError,
    NodeAtOriginError,
    SingularSystemError,
    ZeroWaveVectorError,
)

#: Mass tolerance when combining models into sums.
_MASS_TOL = 1e-12

#: Relative-residual denominators are floored here to avoid 0/0 at nodes.
RESIDUAL_FLOOR = 1e-12


def spacetime_point(t: float, q: ArrayF) -> ArrayF:
    """Build the event array (t, x, y, z) from a time and a position."""
    q = np.asarray(q, dtype=np.float64).reshape(3)
    return np.array([t, q[0], q[1], q[2]])


@dataclass(frozen=True)
class PlaneWaveSpec:
    """One positive-energy plane wave: wave vector, branch (1 or 2), amplitude."""

    k: tuple[float, float, float]
    branch: int
    amplitude: complex = 1.0 + 0.0j

    def __post_init__(self):
        k = tuple(float(c) for c in self.k)
        if len(k) != 3:
            raise ValueError(f"k must have 3 components, got {self.k!r}")
        if k[0] == 0.0 and k[1] == 0.0 and k[2] == 0.0:
            raise ZeroWaveVectorError("plane-wave spinors are singular at k = 0")
        if self.branch not in (1, 2):
            raise ValueError(f"branch must be 1 or 2, got {self.branch!r}")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "amplitude", complex(self.amplitude))


def four_momentum(k: ArrayF, mass: float) -> ArrayF:
    """(k0, k) with k0 = sqrt(mass^2 + |k|^2); the phase vector of a wave."""
    k = np.asarray(k, dtype=np.float64).reshape(3)
    k0 = float(np.hypot(mass, np.linalg.norm(k)))
    return np.array([k0, k[0], k[1], k[2]])


def plane_wave_spinor(k: ArrayF, branch: int, mass: float) -> ArrayC:
    """Constant spinor column of a positive-energy wave, normalized to 2.

    The two branches span the positive-energy solutions for one k; psi^dag
    psi = a_-^2 + a_+^2 = 2 regardless of k or mass.
    """
    k = np.asarray(k, dtype=np.float64).reshape(3)
    kn = float(np.linalg.norm(k))
    if kn == 0.0:
        raise ZeroWaveVectorError("plane-wave spinors are singular at k = 0")
    k0 = float(np.hypot(mass, kn))
    a_plus = np.sqrt(1.0 + mass / k0)
    a_minus = np.sqrt(1.0 - mass / k0)
    k1, k2, k3 = k
    if branch == 1:
        return np.array(
            [a_minus, 0.0, -a_plus * k3 / kn, -a_plus * (k1 + 1j * k2) / kn],
            dtype=np.complex128,
        )
    if branch == 2:
        return np.array(
            [0.0, a_minus, -a_plus * (k1 - 1j * k2) / kn, a_plus * k3 / kn],
            dtype=np.complex128,
        )
    raise ValueError(f"branch must be 1 or 2, got {branch!r}")


class WaveFunctionModel(ABC):
    """An evaluatable solution psi: R^4 -> C^4 with analytic gradient."""

    mass: float

    @abstractmethod
    def evaluate_many(self, points: ArrayF) -> ArrayC:
        """Spinor values at an (n, 4) batch of events; returns (n, 4)."""

    @abstractmethod
    def evaluate_with_gradient_many(self, points: ArrayF) -> tuple[ArrayC, ArrayC]:
        """Values (n, 4) and gradients (n, 4, 4) at an (n, 4) batch."""

    def evaluate(self, x: ArrayF) -> ArrayC:
        x = np.asarray(x, dtype=np.float64).reshape(1, 4)
        return self.evaluate_many(x)[0]

    def gradient(self, x: ArrayF) -> ArrayC:
        x = np.asarray(x, dtype=np.float64).reshape(1, 4)
        return self.evaluate_with_gradient_many(x)[1][0]


def _as_points(points: ArrayF) -> ArrayF:
    points = np.ascontiguousarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 4:
        raise ValueError(f"expected an (n, 4) event batch, got shape {points.shape}")
    return points


class PlaneWaveSuperposition(WaveFunctionModel):
    """Finite sum of positive-energy plane waves sharing one mass.

    The empty superposition is the zero solution. Construction precomputes
    one phase row (k0, k) and one amplitude-weighted spinor per wave; all
    evaluation goes through the selected kernel backend.
    """

    def __init__(self, specs: Sequence[PlaneWaveSpec], mass: float):
        if mass < 0:
            raise ValueError(f"mass must be >= 0, got {mass!r}")
        self.mass = float(mass)
        self.specs = tuple(specs)
        w = len(self.specs)
        self._phases = np.zeros((w, 4), dtype=np.float64)
        self._coeffs = np.zeros((w, 4), dtype=np.complex128)
        for i, spec in enumerate(self.specs):
            self._phases[i] = four_momentum(spec.k, self.mass)
            self._coeffs[i] = spec.amplitude * plane_wave_spinor(
                spec.k, spec.branch, self.mass
            )

    def evaluate_many(self, points: ArrayF) -> ArrayC:
        return _kernels.superpose_eval(self._phases, self._coeffs, _as_points(points))

    def evaluate_with_gradient_many(self, points: ArrayF) -> tuple[ArrayC, ArrayC]:
        return _kernels.superpose_eval_grad(
            self._phases, self._coeffs, _as_points(points)
        )

    def scaled(self, factor: complex) -> "PlaneWaveSuperposition":
        specs = [replace(s, amplitude=s.amplitude * factor) for s in self.specs]
        return PlaneWaveSuperposition(specs, self.mass)


def plane_wave(
    k: ArrayF, branch: int, mass: float, amplitude: complex = 1.0
) -> PlaneWaveSuperposition:
    """Single positive-energy plane wave as a one-term superposition."""
    spec = PlaneWaveSpec(tuple(np.asarray(k, dtype=float)), branch, amplitude)
    return PlaneWaveSuperposition([spec], mass)


_CIRC_A = np.array([1, 1, 1, -1], dtype=np.complex128)
_CIRC_B = np.array([-1j, -1j, 1j, -1j], dtype=np.complex128)


class CircularWave(WaveFunctionModel):
    """q-independent rotating solution whose guidance velocity circles at speed 1.

    psi(t) = cos(omega t) (1, 1, 1, -1) + sin(omega t) (-i, -i, +i, -i)

    solves the free equation with mass = omega; its current is
    4 (1, 0, -sin 2wt, cos 2wt), lightlike for every t, so the whole of
    spacetime is mapped into the speed-1 spinor set. Both invariants
    (s, p) vanish identically, in exact float arithmetic as well.
    """

    def __init__(self, omega: float):
        if omega <= 0:
            raise ValueError(f"omega must be > 0, got {omega!r}")
        self.omega = float(omega)
        self.mass = float(omega)

    def evaluate_many(self, points: ArrayF) -> ArrayC:
        points = _as_points(points)
        wt = self.omega * points[:, 0]
        c = np.cos(wt)[:, None]
        s = np.sin(wt)[:, None]
        return c * _CIRC_A + s * _CIRC_B

    def evaluate_with_gradient_many(self, points: ArrayF) -> tuple[ArrayC, ArrayC]:
        points = _as_points(points)
        wt = self.omega * points[:, 0]
        c = np.cos(wt)[:, None]
        s = np.sin(wt)[:, None]
        vals = c * _CIRC_A + s * _CIRC_B
        grads = np.zeros((points.shape[0], 4, 4), dtype=np.complex128)
        grads[:, 0, :] = self.omega * (c * _CIRC_B - s * _CIRC_A)
        return vals, grads


class SumModel(WaveFunctionModel):
    """Pointwise sum of models; all members must share one mass."""

    def __init__(self, members: Sequence[WaveFunctionModel]):
        self.members = tuple(members)
        if not self.members:
            raise ValueError("SumModel needs at least one member")
        masses = [m.mass for m in self.members]
        if max(masses) - min(masses) > _MASS_TOL:
            raise MixedMassError(f"members have different masses: {masses}")
        self.mass = masses[0]

    def evaluate_many(self, points: ArrayF) -> ArrayC:
        points = _as_points(points)
        out = self.members[0].evaluate_many(points)
        for m in self.members[1:]:
            out = out + m.evaluate_many(points)
        return out

    def evaluate_with_gradient_many(self, points: ArrayF) -> tuple[ArrayC, ArrayC]:
        points = _as_points(points)
        vals, grads = self.members[0].evaluate_with_gradient_many(points)
        for m in self.members[1:]:
            v, g = m.evaluate_with_gradient_many(points)
            vals = vals + v
            grads = grads + g
        return vals, grads


class ScaledModel(WaveFunctionModel):
    """A model multiplied by a nonzero constant; diagnostics are unchanged."""

    def __init__(self, base: WaveFunctionModel, factor: complex):
        if factor == 0:
            raise ValueError("scale factor must be nonzero")
        self.base = base
        self.factor = complex(factor)
        self.mass = base.mass

    def evaluate_many(self, points: ArrayF) -> ArrayC:
        return self.factor * self.base.evaluate_many(points)

    def evaluate_with_gradient_many(self, points: ArrayF) -> tuple[ArrayC, ArrayC]:
        vals, grads = self.base.evaluate_with_gradient_many(points)
        return self.factor * vals, self.factor * grads


@dataclass(frozen=True)
class QuadratureSpec:
    """Tensor-product Gauss-Legendre grid in momentum space.

    nodes_per_axis = 1 degenerates to a single plane wave at the packet
    center, which is occasionally useful as a sanity limit.
    """

    nodes_per_axis: int = 5
    radius: float = 1.25
    node_cap: int = 100_000

    def __post_init__(self):
        if self.nodes_per_axis < 1:
            raise ValueError("nodes_per_axis must be >= 1")
        if self.radius <= 0:
            raise ValueError("radius must be > 0")
        if self.nodes_per_axis**3 > self.node_cap:
            raise ValueError(
                f"{self.nodes_per_axis}^3 nodes exceed the cap {self.node_cap}"
            )


def gaussian_packet(
    center: ArrayF,
    width: float,
    branch: int,
    quad: QuadratureSpec,
    mass: float = 1.0,
) -> PlaneWaveSuperposition:
    """Positive-energy packet: Gaussian momentum weights on a uniform k-grid.

    Nodes are midpoint-rule points on the cube of the given radius around
    the center wave vector, weighted by exp(-|k - center|^2 / (2 width^2)).
    Uniform node spacing dk matters: it makes the superposition exactly
    periodic with period 2 pi / dk per axis, so inside one period cell the
    density is a clean localized packet with no incoherent background.
    Irregular nodes (e.g. Gauss-Legendre) would smear a pedestal of mass
    over all of space. The result is normalized so psi^dag psi = 1 at the
    origin event. Being a finite sum of exact solutions, the packet
    satisfies the free equation to rounding error.
    """
    center = np.asarray(center, dtype=np.float64).reshape(3)
    if width <= 0:
        raise ValueError(f"width must be > 0, got {width!r}")
    n = quad.nodes_per_axis
    spacing = 2.0 * quad.radius / n
    nodes = -quad.radius + spacing * (np.arange(n) + 0.5)
    specs = []
    for ix in range(n):
        for iy in range(n):
            for iz in range(n):
                k = center + np.array([nodes[ix], nodes[iy], nodes[iz]])
                if np.linalg.norm(k) < 1e-12:
                    raise NodeAtOriginError(
                        "quadrature grid touches k = 0; shrink the radius or "
                        "move the center"
                    )
                offset2 = nodes[ix] ** 2 + nodes[iy] ** 2 + nodes[iz] ** 2
                amp = np.exp(-offset2 / (2.0 * width**2))
                specs.append(PlaneWaveSpec(tuple(k), branch, amp))
    packet = PlaneWaveSuperposition(specs, mass)
    n0 = norm_squared(packet.evaluate(np.zeros(4)))
    if not n0 > 0.0:
        raise SingularSystemError("packet vanished at its reference event")
    return packet.scaled(1.0 / np.sqrt(n0))


def spanning_waves(
    wavenumber: float,
    amplitudes: Sequence[complex] = (1.0, 1.0, 1.0, 1.0),
) -> list[PlaneWaveSpec]:
    """Four waves whose values stay linearly independent at every event.

    Both branches along +z and both along +x at the same |k|. Superpositions
    of this family can therefore match any target spinor at any chosen
    event, which is how speed-1 initial data gets manufactured.
    """
    if wavenumber <= 0:
        raise ValueError(f"wavenumber must be > 0, got {wavenumber!r}")
    kz = (0.0, 0.0, float(wavenumber))
    kx = (float(wavenumber), 0.0, 0.0)
    a = [complex(c) for c in amplitudes]
    if len(a) != 4:
        raise ValueError("need exactly 4 amplitudes")
    return [
        PlaneWaveSpec(kz, 1, a[0]),
        PlaneWaveSpec(kz, 2, a[1]),
        PlaneWaveSpec(kx, 1, a[2]),
        PlaneWaveSpec(kx, 2, a[3]),
    ]


def speed_c_coefficients(
    x: ArrayF, target: ArrayC, wavenumber: float, mass: float = 1.0
) -> ArrayC:
    """Coefficients making the four spanning waves hit a speed-1 spinor at x.

    target must be a nonzero spinor fixed by the +z eigenprojector. Solves
    the 4x4 linear system of wave values at the event x; the system is
    regular for every x, so a singular solve is reported as an internal
    failure rather than a usage error.
    """
    target = np.asarray(target, dtype=np.complex128).reshape(4)
    if not norm_squared(target) > 0.0:
        raise ValueError("target spinor must be nonzero")
    proj = eigen_projector((0.0, 0.0, 1.0), +1)
    if np.linalg.norm(proj @ target - target) > 1e-10 * np.linalg.norm(target):
        raise ValueError("target must lie in the +z speed-1 eigenspace")
    waves = [
        PlaneWaveSuperposition([s], mass) for s in spanning_waves(wavenumber)
    ]
    x = np.asarray(x, dtype=np.float64).reshape(4)
    matrix = np.column_stack([w.evaluate(x) for w in waves])
    try:
        coeffs = np.linalg.solve(matrix, target)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"wave-value system singular at {x}") from exc
    if np.linalg.norm(matrix @ coeffs - target) > 1e-10 * np.linalg.norm(target):
        raise SingularSystemError(f"wave-value solve lost accuracy at {x}")
    return coeffs


def speed_c_superposition(
    x: ArrayF, target: ArrayC, wavenumber: float, mass: float = 1.0
) -> PlaneWaveSuperposition:
    """The four-wave model that equals the given speed-1 spinor at event x."""
    coeffs = speed_c_coefficients(x, target, wavenumber, mass)
    return PlaneWaveSuperposition(spanning_waves(wavenumber, coeffs), mass)


def dirac_residual(model: WaveFunctionModel, x: ArrayF) -> float:
    """Relative residual of i gamma^mu d_mu psi = mass psi at one event.

    This is the arbiter of sign and index conventions: every bundled
    analytic model keeps it at rounding level, and a deliberately flipped
    phase drives it to order 2*mass.
    """
    x = np.asarray(x, dtype=np.float64).reshape(1, 4)
    vals, grads = model.evaluate_with_gradient_many(x)
    r = -model.mass * vals[0]
    for mu in range(4):
        r = r + 1j * (GAMMA[mu] @ grads[0, mu])
    scale = max(np.linalg.norm(vals[0]), RESIDUAL_FLOOR)
    return float(np.linalg.norm(r)) / scale
