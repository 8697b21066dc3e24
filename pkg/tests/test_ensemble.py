"""Sampling, histogram comparison, and speed-episode statistics."""
import numpy as np
import pytest
from scipy import stats

import diracbohm as db
from diracbohm.ensemble import (
    HistogramSpec,
    SamplingRegion,
    binned_density,
    density_at,
    equivariance_distance,
    run_ensemble,
    sample_positions,
    speed_c_fraction,
)
from diracbohm.errors import DegenerateDensityError, TooManyLostError


def small_packet():
    # 27 waves, node spacing 0.5, so images repeat every 4 pi (outside the boxes used here)
    return db.gaussian_packet(
        center=(0, 0, 2.0),
        width=0.5,
        branch=1,
        quad=db.QuadratureSpec(nodes_per_axis=3, radius=0.75),
    )


def test_region_and_histogram_validation():
    with pytest.raises(ValueError):
        SamplingRegion(lo=(0, 0, 0), hi=(1, 1, 0), n=10, seed=1)
    with pytest.raises(ValueError):
        SamplingRegion(lo=(0, 0), hi=(1, 1), n=10, seed=1)
    with pytest.raises(ValueError):
        SamplingRegion(lo=(0, 0, 0), hi=(1, 1, 1), n=0, seed=1)
    with pytest.raises(ValueError):
        HistogramSpec(lo=(0, 0, 0), hi=(1, 1, 1), bins=(4, 0, 4))
    edges = HistogramSpec(lo=(0, 0, 0), hi=(1, 2, 3), bins=(2, 4, 5)).edges()
    assert [len(e) for e in edges] == [3, 5, 6]
    assert edges[2][-1] == 3.0


def test_density_at_plane_wave_is_flat():
    rng = np.random.default_rng(11)
    w = db.plane_wave(np.array([0.3, -0.2, 0.9]), branch=1, mass=1.0, amplitude=1.0)
    pts = rng.uniform(-5, 5, size=(200, 3))
    dens = density_at(w, 0.7, pts)
    assert dens.shape == (200,)
    assert np.abs(dens - 2.0).max() < 1e-12  # spinor normalization fixes psi^dag psi = 2
    w3 = db.plane_wave(np.array([0.3, -0.2, 0.9]), branch=1, mass=1.0, amplitude=3.0j)
    assert np.abs(density_at(w3, 0.7, pts) - 18.0).max() < 1e-11


def test_sampling_is_uniform_when_density_is_uniform():
    c = db.CircularWave(1.0)
    region = SamplingRegion(lo=(-1, -1, -1), hi=(1, 1, 1), n=20_000, seed=5)
    pts = sample_positions(c, 0.3, region)
    assert pts.shape == (20_000, 3)
    assert pts.min() >= -1.0 and pts.max() <= 1.0
    for a in range(3):
        # psi^dag psi is constant for this solution, so each axis must be U(-1, 1)
        assert abs(pts[:, a].mean()) < 0.02
        assert abs((pts[:, a] ** 2).mean() - 1.0 / 3.0) < 0.012
        p = stats.kstest(pts[:, a], "uniform", args=(-1.0, 2.0)).pvalue
        assert p > 1e-3


def test_sampling_tracks_packet_density():
    p = small_packet()
    region = SamplingRegion(lo=(-6, -6, -6), hi=(6, 6, 6), n=4_000, seed=9)
    pts = sample_positions(p, 0.0, region)
    for a in range(3):
        assert abs(pts[:, a].mean()) < 0.2  # packet sits at the origin at t = 0
        # uniform draws on this box would give std 3.46; the packet gives about 1.7
        assert 1.4 < pts[:, a].std() < 2.6


def test_sampling_deterministic_given_seed():
    c = db.CircularWave(1.0)
    r1 = SamplingRegion(lo=(-1, -1, -1), hi=(1, 1, 1), n=500, seed=77)
    a = sample_positions(c, 0.0, r1)
    b = sample_positions(c, 0.0, r1)
    assert np.array_equal(a, b)
    r2 = SamplingRegion(lo=(-1, -1, -1), hi=(1, 1, 1), n=500, seed=78)
    assert not np.array_equal(a, sample_positions(c, 0.0, r2))


def test_sampling_single_point():
    c = db.CircularWave(2.0)
    pts = sample_positions(c, 0.0, SamplingRegion((-1, -1, -1), (1, 1, 1), 1, 3))
    assert pts.shape == (1, 3)
    assert np.all(np.abs(pts) <= 1.0)


def test_zero_solution_is_rejected():
    zero = db.PlaneWaveSuperposition([], mass=1.0)
    region = SamplingRegion(lo=(-1, -1, -1), hi=(1, 1, 1), n=10, seed=1)
    with pytest.raises(DegenerateDensityError):
        sample_positions(zero, 0.0, region)
    with pytest.raises(DegenerateDensityError):
        binned_density(zero, 0.0, HistogramSpec((-1, -1, -1), (1, 1, 1), (2, 2, 2)))


def test_binned_density_uniform_case():
    c = db.CircularWave(1.5)
    hist = HistogramSpec(lo=(-1, -1, -1), hi=(1, 1, 1), bins=(4, 4, 4))
    probs = binned_density(c, 0.4, hist)
    assert probs.shape == (4, 4, 4)
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.abs(probs - 1.0 / 64.0).max() < 1e-12  # constant density, equal bins


def test_equivariance_control_is_small_for_uniform_density():
    c = db.CircularWave(1.0)
    region = SamplingRegion(lo=(-1, -1, -1), hi=(1, 1, 1), n=4_000, seed=21)
    pts = sample_positions(c, 0.0, region)
    hist = HistogramSpec(lo=(-1, -1, -1), hi=(1, 1, 1), bins=(4, 4, 4))
    res = equivariance_distance(c, pts, 0.0, 0.0, hist)
    assert res.lost_fraction == 0.0
    assert res.n_used == 4_000
    assert res.node_lost_count == 0
    assert res.distance < 0.12  # pure binning noise at this sample size


def test_equivariance_counts_points_outside_support():
    c = db.CircularWave(1.0)
    samples = np.zeros((10, 3))
    samples[0] = (5.0, 0.0, 0.0)  # outside the histogram box, must be excluded
    hist = HistogramSpec(lo=(-1, -1, -1), hi=(1, 1, 1), bins=(2, 2, 2))
    res = equivariance_distance(c, samples, 0.0, 0.0, hist, lost_tol=0.5)
    assert res.lost_fraction == pytest.approx(0.1)
    assert res.n_used == 9


def test_full_period_transport_matches_control():
    # all trajectories of this solution close after t = pi / omega, so the
    # transported histogram must coincide with the control up to step error
    omega = 1.0
    c = db.CircularWave(omega)
    region = SamplingRegion(lo=(-1, -1, -1), hi=(1, 1, 1), n=2_000, seed=13)
    pts = sample_positions(c, 0.0, region)
    hist = HistogramSpec(lo=(-1, -1, -1), hi=(1, 1, 1), bins=(4, 4, 4))
    control = equivariance_distance(c, pts, 0.0, 0.0, hist)
    moved = equivariance_distance(c, pts, 0.0, np.pi / omega, hist)
    assert moved.lost_fraction < 0.01
    assert abs(moved.distance - control.distance) < 0.02


def test_transport_out_of_support_raises():
    # over a quarter period every point shifts by (0, -1, 0), pushing about
    # half of a [-1, 1]^3 cloud outside the box
    c = db.CircularWave(1.0)
    region = SamplingRegion(lo=(-1, -1, -1), hi=(1, 1, 1), n=1_000, seed=2)
    pts = sample_positions(c, 0.0, region)
    hist = HistogramSpec(lo=(-1, -1, -1), hi=(1, 1, 1), bins=(2, 2, 2))
    with pytest.raises(TooManyLostError):
        equivariance_distance(c, pts, 0.0, np.pi / 2, hist)


def test_speed_fraction_all_one_for_unit_speed_field():
    c = db.CircularWave(1.0)
    region = SamplingRegion(lo=(-1, -1, -1), hi=(1, 1, 1), n=200, seed=4)
    res = speed_c_fraction(c, 0.0, 0.5, region, epsilons=[1e-4, 1e-2, 0.5])
    assert [f for _, f in res.fractions] == [1.0, 1.0, 1.0]
    assert res.max_speed == pytest.approx(1.0, abs=1e-9)
    assert res.n_used == 200


def test_speed_fraction_monotone_for_packet():
    p = small_packet()
    region = SamplingRegion(lo=(-6, -6, -6), hi=(6, 6, 6), n=500, seed=31)
    eps = [1e-4, 1e-2, 0.1, 0.3, 0.9]
    res = speed_c_fraction(p, 0.0, 1.0, region, epsilons=eps)
    fracs = [f for _, f in res.fractions]
    assert all(b >= a for a, b in zip(fracs, fracs[1:]))
    assert fracs[0] == 0.0  # generic packet never gets this close to speed 1
    assert fracs[-1] > 0.9
    assert res.max_speed < 1.0 + 1e-9


def test_speed_fraction_epsilon_validation():
    c = db.CircularWave(1.0)
    region = SamplingRegion(lo=(-1, -1, -1), hi=(1, 1, 1), n=10, seed=4)
    for bad in (0.0, 1.0, -0.1, 2.0):
        with pytest.raises(ValueError):
            speed_c_fraction(c, 0.0, 0.5, region, epsilons=[bad])


def test_run_ensemble_report_structure():
    omega = 1.0
    c = db.CircularWave(omega)
    region = SamplingRegion(lo=(-1, -1, -1), hi=(1, 1, 1), n=2_000, seed=6)
    hist = HistogramSpec(lo=(-1, -1, -1), hi=(1, 1, 1), bins=(4, 4, 4))
    report = run_ensemble(c, 0.0, np.pi / omega, region, [1e-4, 0.5], hist)
    assert report.n_requested == 2_000
    assert report.n_accepted == 2_000
    assert report.near_node_count == 0
    assert [f for _, f in report.speed_c_fractions] == [1.0, 1.0]
    assert report.max_speed == pytest.approx(1.0, abs=1e-9)
    assert [rec["t"] for rec in report.equivariance] == [0.0, np.pi]
    control, moved = report.equivariance
    assert control["lost_fraction"] == 0.0
    assert moved["n_used"] > 1_900
    assert abs(moved["distance"] - control["distance"]) < 0.02


def test_run_ensemble_argument_validation():
    c = db.CircularWave(1.0)
    region = SamplingRegion(lo=(-1, -1, -1), hi=(1, 1, 1), n=10, seed=6)
    hist = HistogramSpec(lo=(-1, -1, -1), hi=(1, 1, 1), bins=(2, 2, 2))
    with pytest.raises(ValueError):
        run_ensemble(c, 1.0, 1.0, region, [0.5], hist)
    with pytest.raises(ValueError):
        run_ensemble(c, 0.0, 1.0, region, [0.0], hist)
