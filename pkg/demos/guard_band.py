"""
Guard band against emission leakage
===================================

A drone channel of 20 MHz is cut into 4 blocks. Each block leaks into the
satellite band through the emission mask; the average over blocks is the
drone power the NFZ has to deal with. Widening the guard band pushes the
satellite band further down the mask.
"""

from nfzopt import SpectrumPlan, default_mask, guard_band_sweep

mask = default_mask()
print("mask offsets (MHz):", mask.offsets)
print("mask levels (dB):  ", mask.levels_db)

plan = SpectrumPlan(sat_bandwidth=10.0, drone_bandwidth=20.0, blocks=4)
for w, p in guard_band_sweep(plan, range(8)):
    print(f"w={w:.0f} MHz  average leaked power={p:.3e}")

# the first MHz of guard band buys far more than any later one
