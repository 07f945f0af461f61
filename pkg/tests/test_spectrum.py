import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nfzopt import (
    EmissionMask,
    SpectrumPlan,
    average_emission_power,
    block_emission_power,
    default_mask,
    guard_band_sweep,
)


def midpoint(fn, lo, hi, panels=10**6):
    x = lo + (np.arange(panels) + 0.5) * (hi - lo) / panels
    return float(np.sum(fn(x)) * (hi - lo) / panels)


def step_density(f):
    # 0 dB below 1 MHz offset, -20 dB from there on
    return np.where(f < 1.0, 1.0, 0.01)


STEP = EmissionMask((0.0, 1.0, 1.0), (0.0, 0.0, -20.0))


def test_zero_mask_leaks_nothing():
    plan = SpectrumPlan(blocks=3, mask=EmissionMask.constant(0.0))
    assert [block_emission_power(plan, k) for k in (1, 2, 3)] == [0.0, 0.0, 0.0]


@pytest.mark.parametrize("k", [1, 2, 4])
def test_constant_mask(k):
    plan = SpectrumPlan(blocks=4, sat_bandwidth=10.0, tx_power=2.0, mask=EmissionMask.constant(0.3))
    assert block_emission_power(plan, k) == pytest.approx(2.0 * 0.3 * 10.0, rel=1e-12)
    assert average_emission_power(plan) == pytest.approx(6.0, rel=1e-12)


def test_step_mask_single_block_against_midpoint():
    plan = SpectrumPlan(sat_bandwidth=10.0, drone_bandwidth=5.0, blocks=1, guard_width=0.0, mask=STEP)
    lo, hi = plan.leakage_window(1)
    assert (lo, hi) == (2.5, 12.5)
    assert block_emission_power(plan, 1) == pytest.approx(midpoint(step_density, lo, hi), rel=1e-9)


def test_step_mask_five_blocks_average():
    plan = SpectrumPlan(sat_bandwidth=10.0, drone_bandwidth=25.0, blocks=5, mask=STEP)
    oracle = [midpoint(step_density, 2.5 + (5 - k) * 5.0, 12.5 + (5 - k) * 5.0) for k in range(1, 6)]
    assert average_emission_power(plan) == pytest.approx(sum(oracle) / 5, rel=1e-9)


def test_block_index_checked():
    plan = SpectrumPlan(blocks=2)
    for k in (0, 3):
        with pytest.raises(IndexError):
            block_emission_power(plan, k)


def test_single_block_average_is_block_power():
    plan = SpectrumPlan(blocks=1, drone_bandwidth=5.0)
    assert average_emission_power(plan) == block_emission_power(plan, 1)


def _independent_default_density(f):
    off = [0.0, 2.5, 3.5, 7.5, 12.5, 22.5]
    lv = [0.0, -10.0, -35.0, -40.0, -45.0, -60.0]
    return 10 ** (np.interp(f, off, lv) / 10)


def test_default_mask_closed_form_against_midpoint():
    m = default_mask()
    for lo, hi in [(2.5, 12.5), (3.0, 13.0), (9.5, 19.5), (20.0, 30.0)]:
        assert m.integrate(lo, hi) == pytest.approx(midpoint(_independent_default_density, lo, hi), rel=1e-6)


def test_mask_levels_interpolate_in_db():
    m = EmissionMask((0.0, 2.0), (0.0, -20.0))
    assert m.level_db(1.0) == pytest.approx(-10.0)
    assert m.level_db(5.0) == -20.0
    assert m.density(1.0) == pytest.approx(0.1)


def test_silent_segments():
    m = EmissionMask((0.0, 1.0, 2.0), (0.0, -math.inf, -math.inf))
    assert m.integrate(1.0, 5.0) == 0.0
    assert m.integrate(0.0, 1.0) == 0.0


def test_mask_csv(tmp_path):
    p = tmp_path / "mask.csv"
    p.write_text("offset_mhz,level_db\n0,0\n2.5,-10\n3.5,-inf\n")
    m = EmissionMask.from_csv(p)
    assert m.levels_db[-1] == -math.inf
    assert m.integrate(3.5, 10) == 0.0


def test_mask_rejects_decreasing_offsets():
    with pytest.raises(ValueError):
        EmissionMask((0.0, 2.0, 1.0), (0.0, -1.0, -2.0))


def test_sweep_single_width():
    plan = SpectrumPlan()
    assert guard_band_sweep(plan, [0]) == [(0.0, average_emission_power(plan.with_guard(0)))]


def test_default_sweep_biggest_drop_first():
    sweep = guard_band_sweep(SpectrumPlan(), range(8))
    p = np.array([v for _, v in sweep])
    drops = -np.diff(p)
    assert np.all(drops >= 0)
    assert int(np.argmax(drops)) == 0


monotone_masks = st.lists(st.floats(0.1, 5.0), min_size=1, max_size=6).flatmap(
    lambda gaps: st.lists(st.floats(0.0, 15.0), min_size=len(gaps) + 1, max_size=len(gaps) + 1).map(
        lambda drops: EmissionMask(
            tuple(np.concatenate([[0.0], np.cumsum(gaps)])),
            tuple(-np.cumsum(drops)),
        )
    )
)


@settings(max_examples=60, deadline=None)
@given(monotone_masks, st.integers(1, 6), st.floats(0.5, 8.0))
def test_non_increasing_mask_properties(mask, blocks, wb):
    plan = SpectrumPlan(blocks=blocks, drone_bandwidth=blocks * wb, sat_bandwidth=7.0, mask=mask)
    ws = [0.0, 0.5, 1.0, 2.0, 4.0]
    ps = [average_emission_power(plan.with_guard(w)) for w in ws]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(ps, ps[1:]))
    pk = [block_emission_power(plan, k) for k in range(1, blocks + 1)]
    assert all(b >= a * (1 - 1e-12) for a, b in zip(pk, pk[1:]))


@given(st.floats(0.0, 100.0))
def test_average_power_linear_in_tx_power(pt):
    base = average_emission_power(SpectrumPlan(tx_power=1.0))
    assert average_emission_power(SpectrumPlan(tx_power=pt)) == pytest.approx(pt * base, rel=1e-12, abs=1e-300)
