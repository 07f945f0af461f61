import math

import numpy as np
import pytest

from nfzopt import (
    AngularGrid,
    Budget,
    ConstantPattern,
    Direction,
    GeneralField,
    HemisphericalRegion,
    HomogeneousField,
    InfeasibleBudgetError,
    UlaPattern,
    best_cylinder_of_volume,
    build_optimal_nfz,
    compare_shapes,
    cylinder_surface,
    default_breaks,
    dome_of_volume,
    eliminated_interference,
    expected_interference,
    markov_tail_bound,
    optimal_radius,
    solve_multiplier,
    surface_volume,
)
from nfzopt.nfz import (
    eliminated_for_radii,
    read_surface_csv,
    surface_for_multiplier,
    theorem_residual,
    write_surface_csv,
)

R = 1000.0


def test_optimal_radius_exact_power(iso, loss):
    pat = ConstantPattern(8.0)
    mu = 1e-7 * 8 / 32
    assert optimal_radius(Direction(0.2), mu, HomogeneousField(1e-7), pat, loss, 1.0) == pytest.approx(4.0, rel=1e-14)


def test_optimal_radius_null_direction(ula, loss):
    r = optimal_radius(Direction(math.pi / 6), 1e-12, HomogeneousField(1e-7), ula, loss, 1.0)
    assert r == 1.0


def test_optimal_radius_ratio_law(loss):
    f = HomogeneousField(1e-6)
    mu = 1e-9
    r1 = optimal_radius(Direction(0.1), mu, f, ConstantPattern(50.0), loss, 1.0)
    r2 = optimal_radius(Direction(0.1), mu, f, ConstantPattern(5.0), loss, 1.0)
    assert r1 / r2 == pytest.approx(10 ** (1 / 2.5), rel=1e-12)


def test_optimal_radius_rejects_bad_mu(homog, iso, loss):
    with pytest.raises(ValueError):
        optimal_radius(Direction(0.1), 0.0, homog, iso, loss, 1.0)


def test_optimal_radius_general_field_largest_root(iso, loss):
    # density rising with distance: P lambda(r) l(r) g = mu has one root beyond 1
    f = GeneralField(lambda t, p, r: 1e-6 * np.asarray(r) ** 1.5, bound=1.0)
    mu = 1e-6 * 20.0**-1.0
    r = optimal_radius(Direction(0.3), mu, f, iso, loss, 1.0, outer=1e4)
    assert r == pytest.approx(20.0, rel=1e-10)


def test_forward_then_invert(pfield, ula, loss, default_grid):
    mu0 = 3.3e-14
    surf = surface_for_multiplier(mu0, pfield, ula, loss, 1.0, default_grid, outer=R)
    a = eliminated_interference(surf, pfield, ula, loss, 1.0, default_grid)
    cal = solve_multiplier(Budget(0.0, a), pfield, ula, loss, 1.0, default_grid, outer=R)
    assert cal.relative_error <= 1e-8
    assert cal.mu == pytest.approx(mu0, rel=1e-6)


def test_calibration_trace_is_monotone(pfield, ula, loss, default_grid):
    e_a = expected_interference(HemisphericalRegion(R), pfield, ula, loss, 1.0, default_grid)
    cal = solve_multiplier(Budget.from_cap(e_a, 0.5 * e_a), pfield, ula, loss, 1.0, default_grid, outer=R)
    assert cal.iterations <= 60
    assert cal.relative_error <= 1e-8
    pairs = sorted(cal.trace)
    assert all(e2 <= e1 * (1 + 1e-14) for (_, e1), (_, e2) in zip(pairs, pairs[1:]))
    mus = np.geomspace(cal.mu / 1e4, cal.mu * 1e4, 60)
    es = [eliminated_interference(surface_for_multiplier(m, pfield, ula, loss, 1.0, default_grid, outer=R),
                                  pfield, ula, loss, 1.0, default_grid) for m in mus]
    assert np.all(np.diff(es) <= 0)


def test_budget_near_total_fills_region(pfield, ula, loss, coarse_grid):
    e_a = expected_interference(HemisphericalRegion(R), pfield, ula, loss, 1.0, coarse_grid)
    surf = build_optimal_nfz(Budget.from_cap(e_a, 1e-6 * e_a), pfield, ula, loss, 1.0, coarse_grid, outer=R)
    assert np.median(surf.radii) == R
    # directions near the ULA nulls stay short; they carry almost nothing
    e_b = eliminated_interference(surf, pfield, ula, loss, 1.0, coarse_grid)
    assert e_b == pytest.approx(e_a, rel=2e-6)


def test_infeasible_budget(pfield, ula, loss, coarse_grid):
    e_a = expected_interference(HemisphericalRegion(R), pfield, ula, loss, 1.0, coarse_grid)
    with pytest.raises(InfeasibleBudgetError):
        solve_multiplier(Budget(0.0, e_a * 1.0000001), pfield, ula, loss, 1.0, coarse_grid, outer=R)


def test_degenerate_budget_needs_no_nfz(pfield, ula, loss, coarse_grid, caplog):
    surf = build_optimal_nfz(Budget(1.0, -0.5), pfield, ula, loss, 1.0, coarse_grid, outer=R)
    assert surf.params["status"] == "no NFZ required"
    assert surface_volume(surf) == 0.0
    assert "without an NFZ" in caplog.text


def test_small_budget_met_by_floor(pfield, ula, loss, coarse_grid):
    surf = build_optimal_nfz(Budget(0.0, 1e-30), pfield, ula, loss, 1.0, coarse_grid, outer=R)
    assert surf.params["status"] == "floor sufficient"
    assert np.all(surf.radii == 1.0)


def test_symmetric_case_is_dome(loss):
    grid = AngularGrid(16, 8)
    f, pat = HomogeneousField(1e-6), ConstantPattern(2.0)
    e_a = expected_interference(HemisphericalRegion(200.0), f, pat, loss, 1.0, grid)
    surf = build_optimal_nfz(Budget.from_cap(e_a, 0.6 * e_a), f, pat, loss, 1.0, grid, outer=200.0)
    assert np.ptp(surf.radii) == 0.0


def test_residual_and_ratio_law(pfield, ula, loss, default_grid):
    e_a = expected_interference(HemisphericalRegion(R), pfield, ula, loss, 1.0, default_grid)
    surf = build_optimal_nfz(Budget.from_cap(e_a, 0.5 * e_a), pfield, ula, loss, 1.0, default_grid, outer=R)
    assert theorem_residual(surf, pfield, ula, loss, 1.0, R) <= 1e-9
    t, p = default_grid.mesh()
    s = pfield.angular(t, p) * ula.gain(t, p)
    free = (surf.radii > 1) & (surf.radii < R)
    rng = np.random.default_rng(0)
    idx = np.flatnonzero(free)
    i, j = rng.choice(idx, 1000), rng.choice(idx, 1000)
    r, sv = surf.radii.ravel(), s.ravel()
    np.testing.assert_allclose((r[i] / r[j]) ** 2.5, sv[i] / sv[j], rtol=1e-9)


def test_power_scaling_keeps_shape(pfield, ula, loss, coarse_grid):
    e_a = expected_interference(HemisphericalRegion(R), pfield, ula, loss, 1.0, coarse_grid)
    s1 = build_optimal_nfz(Budget.from_cap(e_a, 0.5 * e_a), pfield, ula, loss, 1.0, coarse_grid, outer=R)
    s3 = build_optimal_nfz(Budget.from_cap(3 * e_a, 1.5 * e_a), pfield, ula, loss, 3.0, coarse_grid, outer=R)
    np.testing.assert_allclose(s3.radii, s1.radii, rtol=1e-7)
    assert s3.params["mu"] == pytest.approx(3 * s1.params["mu"], rel=1e-7)


def test_argmax_follows_density_times_gain(pfield, ula, loss, default_grid):
    e_a = expected_interference(HemisphericalRegion(R), pfield, ula, loss, 1.0, default_grid)
    surf = build_optimal_nfz(Budget.from_cap(e_a, 0.5 * e_a), pfield, ula, loss, 1.0, default_grid, outer=R)
    t, p = default_grid.mesh()
    s = pfield.angular(t, p) * ula.gain(t, p)
    assert set(np.flatnonzero(surf.radii == surf.radii.max())) == set(np.flatnonzero(s == s.max()))
    k = np.unravel_index(np.argmax(surf.radii), surf.radii.shape)
    assert math.radians(30) < t[k] <= math.radians(60) and p[k] < math.pi


def test_volumes_closed_form():
    grid = AngularGrid()
    assert surface_volume(dome_of_volume(2 * math.pi / 3, grid)) == pytest.approx(2 * math.pi / 3, rel=1e-13)
    assert dome_of_volume(2 * math.pi / 3).params["radius"] == pytest.approx(1.0)
    assert surface_volume(dome_of_volume(0.0, grid)) == 0.0
    assert surface_volume(cylinder_surface(3.0, 4.0, grid)) == pytest.approx(36 * math.pi, rel=1e-4)


@pytest.mark.parametrize("volume", [1e-3, 0.7, 5.0, 1234.5, 9.9e8])
def test_dome_round_trip(volume):
    assert surface_volume(dome_of_volume(volume)) == pytest.approx(volume, rel=1e-6)


@pytest.mark.parametrize("radius, height", [(3, 4), (100, 20), (10, 300), (0.5, 900), (900, 0.5)])
def test_cylinder_volume_any_aspect(radius, height, default_grid):
    assert surface_volume(cylinder_surface(radius, height, default_grid)) == pytest.approx(
        math.pi * radius**2 * height, rel=1e-4)


def test_best_cylinder_beats_scan(iso, homog, loss):
    grid = AngularGrid(32, 8)
    cyl = best_cylinder_of_volume(5e4, homog, iso, loss, 1.0, grid, outer=500.0)
    scan = [v for _, v in cyl.params["scan"] if math.isfinite(v)]
    assert cyl.params["eliminated"] >= max(scan)
    assert surface_volume(cyl) == pytest.approx(5e4, rel=1e-4)
    assert eliminated_interference(cyl, homog, iso, loss, 1.0, cyl.grid) == pytest.approx(cyl.params["eliminated"])


def test_narrow_lobe_prefers_tall_cylinder(homog, loss):
    pat = UlaPattern(64, 0.25)
    grid = AngularGrid(96, 8, *default_breaks(pat))
    cyl = best_cylinder_of_volume(1e5, homog, pat, loss, 1.0, grid, outer=2000.0)
    ratios = [r for r, v in cyl.params["scan"] if math.isfinite(v)]
    assert cyl.params["ratio"] > float(np.median(ratios))


def test_markov_bound_values():
    assert markov_tail_bound(0.0, 1.0) == 0.0
    assert markov_tail_bound(2.5, 2.5) == 1.0
    assert markov_tail_bound(1.0, 4.0) == 0.25
    with pytest.raises(ValueError):
        markov_tail_bound(1.0, 0.0)


def test_compare_shapes_small(pfield, ula, loss, coarse_grid):
    res = compare_shapes(1e6, pfield, ula, loss, 1.0, coarse_grid, outer=R)
    assert [r.shape for r in res] == ["optimal", "dome", "cylinder"]
    for r in res:
        assert r.volume == pytest.approx(1e6, rel=1e-4)
    assert res[0].eliminated >= res[1].eliminated and res[0].eliminated >= res[2].eliminated


def test_compare_symmetric_case(loss):
    grid = AngularGrid(32, 8)
    f, pat = HomogeneousField(1e-6), ConstantPattern(1.0)
    res = compare_shapes(3e5, f, pat, loss, 1.0, grid, outer=200.0)
    assert res[0].eliminated == pytest.approx(res[1].eliminated, rel=1e-8)


def test_local_perturbations_do_not_help(pfield, ula, loss, coarse_grid):
    e_a = expected_interference(HemisphericalRegion(R), pfield, ula, loss, 1.0, coarse_grid)
    surf = build_optimal_nfz(Budget.from_cap(e_a, 0.5 * e_a), pfield, ula, loss, 1.0, coarse_grid, outer=R)
    w = coarse_grid.solid_weights.ravel()
    r0 = surf.radii.ravel()
    base = eliminated_for_radii(surf.radii, pfield, ula, loss, 1.0, coarse_grid)
    free = np.flatnonzero((r0 > 1) & (r0 < R))
    rng = np.random.default_rng(1)
    for _ in range(1000):
        i, j = rng.choice(free, 2, replace=False)
        v = r0**3 / 3
        delta = rng.uniform(0, 0.2) * v[i]
        v2 = v.copy()
        v2[i] -= delta / w[i] * w[i]
        v2[j] += delta * w[i] / w[j]
        r2 = np.cbrt(3 * v2)
        e = eliminated_for_radii(r2.reshape(surf.radii.shape), pfield, ula, loss, 1.0, coarse_grid)
        assert e <= base * (1 + 1e-12)


def test_surface_csv_round_trip(tmp_path, pfield, ula, loss, coarse_grid):
    surf = surface_for_multiplier(5e-14, pfield, ula, loss, 1.0, coarse_grid, outer=R)
    path = tmp_path / "s.csv"
    write_surface_csv(surf, path, "nfzopt test", {"scenario": "abc"})
    back = read_surface_csv(path)
    np.testing.assert_array_equal(back.radii, surf.radii)
    assert back.grid.same_nodes(coarse_grid)
    assert back.params["mu"] == 5e-14
    assert path.read_text().startswith("# nfzopt test\n# meta: ")
