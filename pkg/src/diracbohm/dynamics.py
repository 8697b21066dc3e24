"""Bohmian trajectory integration along the guidance law.

A trajectory is the integral curve of the velocity field
v(t, q) = j_spatial / j0 evaluated on a wave-function model. Integration is
adaptive Runge-Kutta 5(4) with dense output by default; a fixed-step
classical RK4 mode exists for reproducibility experiments. Near-speed-1
episodes are located on the dense output and reported as maximal time
intervals; wave-function nodes terminate integration gracefully.

transport_batch is the vectorized workhorse for ensembles: it advances many
positions at once with fixed-step RK4 and records per-trajectory maximum
speeds, which is all the ensemble statistics need.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .algebra import (
    ArrayF,
    PSI_FLOOR,
    bohm_velocity,
    current_many,
    s_deviation_many,
)
from .errors import NearNodeError, StepFailureError
from .models import WaveFunctionModel

#: Dense-output scan: subsamples per solver step and overall minimum.
_EVENT_REFINE = 8
_EVENT_MIN_GRID = 512


@dataclass
class IntegratorOptions:
    """Tolerances and thresholds for trajectory integration."""

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    psi_floor: float = PSI_FLOOR
    speed_event_epsilon: float = 1e-6
    max_samples: int = 100_000
    # When set, integrate with classical RK4 at this step instead of the
    # adaptive solver.
    fixed_step: float | None = None

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "max_step", "psi_floor"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.speed_event_epsilon < 1.0:
            raise ValueError("speed_event_epsilon must lie in (0, 1)")
        if self.max_samples < 2:
            raise ValueError("max_samples must be at least 2")
        if self.fixed_step is not None and self.fixed_step <= 0:
            raise ValueError("fixed_step must be positive when set")


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    q: ArrayF
    v: ArrayF
    speed: float
    s_dev: float
    density: float


@dataclass(frozen=True)
class TrajectoryEvent:
    kind: str  # "SpeedC" | "NearNode" | "LeftDomain"
    t_start: float
    t_end: float


@dataclass
class Trajectory:
    """Integrated world line with per-sample diagnostics and dense output."""

    model: WaveFunctionModel
    t_start: float
    t_end: float
    samples: list[TrajectorySample]
    events: list[TrajectoryEvent]
    termination_reason: str  # "Completed" | "NearNode"
    max_speed: float
    interpolant: Callable[[ArrayF], ArrayF] = field(repr=False)

    def position(self, t: ArrayF) -> ArrayF:
        """Dense-output position; scalar t gives (3,), array t gives (m, 3)."""
        t = np.asarray(t, dtype=np.float64)
        out = self.interpolant(np.atleast_1d(t))
        return out[0] if t.ndim == 0 else out


def velocity_field(
    model: WaveFunctionModel, t: float, q: ArrayF, psi_floor: float = PSI_FLOOR
) -> ArrayF:
    """Guidance velocity of the model at one event; raises near nodes."""
    q = np.asarray(q, dtype=np.float64).reshape(3)
    psi = model.evaluate(np.array([t, q[0], q[1], q[2]]))
    return bohm_velocity(psi, psi_floor)


def _field_rows(model: WaveFunctionModel, t: float, ys: ArrayF, psi_floor: float):
    """Velocities and densities for many positions at one shared time.

    Rows at or below the node floor get zero velocity instead of raising,
    so vectorized steppers can mark them and move on.
    """
    pts = np.empty((ys.shape[0], 4), dtype=np.float64)
    pts[:, 0] = t
    pts[:, 1:] = ys
    j = current_many(model.evaluate_many(pts))
    dens = j[:, 0]
    ok = dens > psi_floor
    v = np.zeros_like(ys)
    np.divide(j[:, 1:], dens[:, None], out=v, where=ok[:, None])
    return v, dens


def _speeds_on_grid(model, interp, ts, psi_floor):
    """Speeds |v| along the dense output; zero where density is floored."""
    qs = interp(ts)
    pts = np.column_stack([ts, qs])
    j = current_many(model.evaluate_many(pts))
    speeds = np.zeros(len(ts))
    ok = j[:, 0] > psi_floor
    np.divide(
        np.linalg.norm(j[:, 1:], axis=1), j[:, 0], out=speeds, where=ok
    )
    return speeds


def _bisect_crossing(speed_of_t, lo, hi, threshold, tol_t):
    """Locate a sign change of speed(t) - threshold inside (lo, hi)."""
    f_lo = speed_of_t(lo) - threshold
    while hi - lo > tol_t:
        mid = 0.5 * (lo + hi)
        if (speed_of_t(mid) - threshold) * np.sign(f_lo) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def detect_speed_c_events(
    traj: Trajectory, epsilon: float, psi_floor: float = PSI_FLOOR
) -> list[tuple[float, float]]:
    """Maximal intervals where the dense-output speed is >= 1 - epsilon.

    Crossings inside a grid interval are bisected to a time accuracy of
    1e-9 times the trajectory duration. Episodes narrower than the scan
    grid can escape detection; the grid refines the solver steps eightfold
    with a floor of 512 points.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    span = traj.t_end - traj.t_start
    if span <= 0:
        return []
    n = max(_EVENT_MIN_GRID, _EVENT_REFINE * max(len(traj.samples) - 1, 1)) + 1
    ts = np.linspace(traj.t_start, traj.t_end, n)
    speeds = _speeds_on_grid(traj.model, traj.interpolant, ts, psi_floor)
    threshold = 1.0 - epsilon
    above = speeds >= threshold
    if not above.any():
        return []

    def speed_at(t: float) -> float:
        return float(
            _speeds_on_grid(
                traj.model, traj.interpolant, np.array([t]), psi_floor
            )[0]
        )

    tol_t = 1e-9 * span
    intervals: list[tuple[float, float]] = []
    i = 0
    while i < n:
        if not above[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and above[j + 1]:
            j += 1
        lo = ts[i] if i == 0 else _bisect_crossing(
            speed_at, ts[i - 1], ts[i], threshold, tol_t
        )
        hi = ts[j] if j == n - 1 else _bisect_crossing(
            speed_at, ts[j], ts[j + 1], threshold, tol_t
        )
        intervals.append((float(lo), float(hi)))
        i = j + 1
    return intervals


def _build_samples(model, ts, ys, psi_floor):
    pts = np.column_stack([ts, ys])
    vals = model.evaluate_many(pts)
    j = current_many(vals)
    sdev = s_deviation_many(vals, psi_floor)
    samples = []
    for i, t in enumerate(ts):
        dens = j[i, 0]
        v = j[i, 1:] / dens if dens > psi_floor else np.zeros(3)
        samples.append(
            TrajectorySample(
                t=float(t),
                q=ys[i].copy(),
                v=v,
                speed=float(np.linalg.norm(v)),
                s_dev=float(sdev[i]),
                density=float(dens),
            )
        )
    return samples


def _integrate_adaptive(model, q0, t1, t2, opts):
    floor = opts.psi_floor

    def rhs(t, y):
        pts = np.array([[t, y[0], y[1], y[2]]])
        jrow = current_many(model.evaluate_many(pts))[0]
        if jrow[0] <= floor:
            return np.zeros(3)
        return jrow[1:] / jrow[0]

    def node_event(t, y):
        pts = np.array([[t, y[0], y[1], y[2]]])
        jrow = current_many(model.evaluate_many(pts))[0]
        return jrow[0] - floor

    node_event.terminal = True
    node_event.direction = -1

    sol = solve_ivp(
        rhs,
        (t1, t2),
        q0,
        method="RK45",
        rtol=opts.rel_tol,
        atol=opts.abs_tol,
        max_step=opts.max_step,
        dense_output=True,
        events=[node_event],
    )
    if sol.status == -1:
        raise StepFailureError(f"adaptive integration failed: {sol.message}")
    if len(sol.t) > opts.max_samples:
        raise StepFailureError(
            f"{len(sol.t)} solver steps exceed max_samples={opts.max_samples}"
        )
    hit_node = sol.status == 1

    def interp(ts):
        return np.asarray(sol.sol(ts)).T

    return np.asarray(sol.t), sol.y.T.copy(), interp, hit_node


def _integrate_fixed(model, q0, t1, t2, opts):
    h = opts.fixed_step
    nsteps = max(1, math.ceil((t2 - t1) / h - 1e-12))
    if nsteps + 1 > opts.max_samples:
        raise StepFailureError(
            f"{nsteps + 1} fixed steps exceed max_samples={opts.max_samples}"
        )
    ts = t1 + (t2 - t1) * np.arange(nsteps + 1) / nsteps
    floor = opts.psi_floor
    ys = [np.asarray(q0, dtype=np.float64)]
    fs = []
    hit_node = False
    for i in range(nsteps):
        t = ts[i]
        y = ys[-1]
        hh = ts[i + 1] - t
        k1, dens = _field_rows(model, t, y[None, :], floor)
        fs.append(k1[0])
        if dens[0] <= floor:
            hit_node = True
            break
        k2, _ = _field_rows(model, t + hh / 2, (y + hh / 2 * k1[0])[None, :], floor)
        k3, _ = _field_rows(model, t + hh / 2, (y + hh / 2 * k2[0])[None, :], floor)
        k4, _ = _field_rows(model, t + hh, (y + hh * k3[0])[None, :], floor)
        ys.append(y + hh / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]))
    else:
        k_end, _ = _field_rows(model, ts[-1], ys[-1][None, :], floor)
        fs.append(k_end[0])
    ts = ts[: len(ys)]
    ys_arr = np.vstack(ys)
    fs_arr = np.vstack(fs[: len(ys)])
    if len(ts) >= 2:
        spline = CubicHermiteSpline(ts, ys_arr, fs_arr, axis=0)

        def interp(tt):
            return np.asarray(spline(tt)).reshape(-1, 3)

    else:

        def interp(tt):
            return np.repeat(ys_arr, len(np.atleast_1d(tt)), axis=0)

    return ts, ys_arr, interp, hit_node


def integrate(
    model: WaveFunctionModel,
    q0: ArrayF,
    t1: float,
    t2: float,
    opts: IntegratorOptions | None = None,
) -> Trajectory:
    """Integrate the guidance law from (t1, q0) to t2.

    Raises NearNodeError when the starting event already sits at a node;
    a node encountered later terminates with a partial trajectory, a
    NearNode event and termination_reason "NearNode". Speed-1 episodes at
    the configured epsilon are recorded as SpeedC events.
    """
    opts = opts or IntegratorOptions()
    if not t1 < t2:
        raise ValueError(f"need t1 < t2, got {t1!r} >= {t2!r}")
    q0 = np.asarray(q0, dtype=np.float64).reshape(3)
    # Raises NearNodeError if the start is unusable.
    velocity_field(model, t1, q0, opts.psi_floor)

    if opts.fixed_step is not None:
        ts, ys, interp, hit_node = _integrate_fixed(model, q0, t1, t2, opts)
    else:
        ts, ys, interp, hit_node = _integrate_adaptive(model, q0, t1, t2, opts)

    samples = _build_samples(model, ts, ys, opts.psi_floor)
    events: list[TrajectoryEvent] = []
    if hit_node:
        events.append(TrajectoryEvent("NearNode", float(ts[-1]), float(ts[-1])))
    traj = Trajectory(
        model=model,
        t_start=float(ts[0]),
        t_end=float(ts[-1]),
        samples=samples,
        events=events,
        termination_reason="NearNode" if hit_node else "Completed",
        max_speed=0.0,
        interpolant=interp,
    )
    scan_n = max(_EVENT_MIN_GRID, _EVENT_REFINE * max(len(ts) - 1, 1)) + 1
    scan_ts = np.linspace(traj.t_start, traj.t_end, scan_n)
    scan_speeds = _speeds_on_grid(model, interp, scan_ts, opts.psi_floor)
    traj.max_speed = float(scan_speeds.max())
    for lo, hi in detect_speed_c_events(
        traj, opts.speed_event_epsilon, opts.psi_floor
    ):
        traj.events.append(TrajectoryEvent("SpeedC", lo, hi))
    return traj


@dataclass
class TransportResult:
    """Endpoints and per-trajectory diagnostics of a batched transport."""

    endpoints: ArrayF  # (n, 3)
    max_speeds: ArrayF  # (n,)
    node_lost: np.ndarray  # (n,) bool


def transport_batch(
    model: WaveFunctionModel,
    positions: ArrayF,
    t1: float,
    t2: float,
    step: float,
    psi_floor: float = PSI_FLOOR,
) -> TransportResult:
    """Advance many positions from t1 to t2 with fixed-step RK4.

    Rows whose density falls to the node floor (checked once per step) are
    frozen and flagged. Max speeds are tracked at the step grid, which is
    adequate for the threshold statistics downstream of this routine.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    if t2 < t1:
        raise ValueError("need t2 >= t1")
    y = np.array(positions, dtype=np.float64).reshape(-1, 3).copy()
    n = y.shape[0]
    v0, dens = _field_rows(model, t1, y, psi_floor)
    node_lost = dens <= psi_floor
    max_speeds = np.linalg.norm(v0, axis=1)
    if t2 == t1:
        return TransportResult(y, max_speeds, node_lost)
    nsteps = max(1, math.ceil((t2 - t1) / step - 1e-12))
    ts = t1 + (t2 - t1) * np.arange(nsteps + 1) / nsteps
    for i in range(nsteps):
        t = ts[i]
        h = ts[i + 1] - t
        k1, dens = _field_rows(model, t, y, psi_floor)
        newly_lost = (dens <= psi_floor) & ~node_lost
        node_lost |= newly_lost
        alive = ~node_lost
        max_speeds[alive] = np.maximum(
            max_speeds[alive], np.linalg.norm(k1[alive], axis=1)
        )
        k2, _ = _field_rows(model, t + h / 2, y + h / 2 * k1, psi_floor)
        k3, _ = _field_rows(model, t + h / 2, y + h / 2 * k2, psi_floor)
        k4, _ = _field_rows(model, t + h, y + h * k3, psi_floor)
        dy = (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        y[alive] += dy[alive]
    vend, dens = _field_rows(model, ts[-1], y, psi_floor)
    alive = ~node_lost & (dens > psi_floor)
    max_speeds[alive] = np.maximum(
        max_speeds[alive], np.linalg.norm(vend[alive], axis=1)
    )
    return TransportResult(y, max_speeds, node_lost)


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Fixed-header CSV: t,x,y,z,vx,vy,vz,speed,sdev,density."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["t", "x", "y", "z", "vx", "vy", "vz", "speed", "sdev", "density"]
        )
        for s in traj.samples:
            writer.writerow(
                [
                    format(v, ".17g")
                    for v in (
                        s.t,
                        s.q[0],
                        s.q[1],
                        s.q[2],
                        s.v[0],
                        s.v[1],
                        s.v[2],
                        s.speed,
                        s.s_dev,
                        s.density,
                    )
                ]
            )


def events_payload(events: Sequence[TrajectoryEvent]) -> list[dict]:
    """Events as JSON-ready records (kind, t_start, t_end)."""
    return [
        {"kind": e.kind, "t_start": e.t_start, "t_end": e.t_end} for e in events
    ]
