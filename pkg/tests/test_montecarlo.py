import math

import numpy as np
import pytest

from conftest import hemisphere_closed_form
from nfzopt import (
    CapabilityError,
    GeneralField,
    HemisphericalRegion,
    HomogeneousField,
    UlaPattern,
    expected_interference,
    run_replications,
    sample_ppp,
    simulate_interference,
)
from nfzopt.montecarlo import to_spherical, write_points_csv


def test_zero_field_samples_nothing():
    for seed in range(5):
        assert sample_ppp(HemisphericalRegion(100.0), HomogeneousField(0.0), seed).shape == (0, 3)


def test_unbounded_general_field_is_refused():
    f = GeneralField(lambda t, p, r: r)
    with pytest.raises(CapabilityError):
        sample_ppp(HemisphericalRegion(10.0), f, 0)


def test_points_stay_in_region(pfield):
    pts = sample_ppp(HemisphericalRegion(2000.0, 300.0), pfield, 3)
    rho, theta, _ = to_spherical(pts)
    assert pts.shape[0] > 100
    assert np.all(pts[:, 2] >= 0)
    assert np.all((rho > 300.0) & (rho <= 2000.0))


def test_homogeneous_count_mean():
    lam, r = 1e-3, 12.0
    volume = 2 * math.pi / 3 * r**3
    counts = np.array([sample_ppp(HemisphericalRegion(r), HomogeneousField(lam), ss).shape[0]
                       for ss in np.random.SeedSequence(11).spawn(10_000)])
    mean = lam * volume
    # Poisson: variance equals the mean
    assert abs(counts.mean() - mean) <= 3 * math.sqrt(mean / counts.size)
    assert counts.var(ddof=1) == pytest.approx(mean, rel=0.05)


def test_piecewise_cell_counts(pfield):
    r = 2000.0
    region = HemisphericalRegion(r)
    draws = [to_spherical(sample_ppp(region, pfield, ss)) for ss in np.random.SeedSequence(5).spawn(300)]
    theta = np.concatenate([d[1] for d in draws])
    phi = np.concatenate([d[2] for d in draws])
    cells = list(pfield.cells)
    for c in cells:
        n = np.count_nonzero(c.contains(theta, phi))
        expected = 300 * c.intensity * c.solid_angle() * r**3 / 3
        assert abs(n - expected) <= 3 * math.sqrt(expected), (c, n, expected)
    inside_any = np.zeros(theta.shape, bool)
    for c in cells:
        inside_any |= c.contains(theta, phi)
    rest = 2 * math.pi - sum(c.solid_angle() for c in cells)
    expected = 300 * pfield.default * rest * r**3 / 3
    n = np.count_nonzero(~inside_any)
    assert abs(n - expected) <= 3 * math.sqrt(expected)


def test_single_point_interference(loss):
    val = simulate_interference([[0.0, 0.0, 2.0]], UlaPattern(8, 0.25), loss, 1.0)
    assert val == pytest.approx(8 * 2**-2.5, rel=1e-15)


def test_empty_points_give_zero(loss, ula):
    assert simulate_interference(np.empty((0, 3)), ula, loss, 1.0) == 0.0


def test_replications_match_campbell(pfield, ula, loss, default_grid):
    region = HemisphericalRegion(600.0, 150.0)
    analytic = expected_interference(region, pfield, ula, loss, 1.0, default_grid)
    mc = run_replications(region, pfield, ula, loss, 1.0, 10_000, seed=17)
    assert abs(mc.zscore(analytic)) <= 3


def test_replications_thread_independent(homog, iso, loss):
    region = HemisphericalRegion(200.0)
    field = HomogeneousField(1e-5)
    a = run_replications(region, field, iso, loss, 1.0, 400, seed=3, threads=1)
    b = run_replications(region, field, iso, loss, 1.0, 400, seed=3, threads=4)
    assert np.array_equal(a.samples, b.samples)
    assert a.mean == b.mean


@pytest.mark.slow
def test_standardized_error_across_seeds(iso, loss):
    field = HomogeneousField(2e-3)
    region = HemisphericalRegion(10.0)
    analytic = hemisphere_closed_form(2e-3, 2.5, 10.0)
    for seed in range(20):
        mc = run_replications(region, field, iso, loss, 1.0, 10_000, seed=seed)
        assert -4 <= mc.zscore(analytic) <= 4


def test_points_csv(tmp_path):
    p = tmp_path / "pts.csv"
    write_points_csv(np.array([[1.0, 2.0, 3.0]]), p)
    assert p.read_text().splitlines() == ["x,y,z", "1.0,2.0,3.0"]
