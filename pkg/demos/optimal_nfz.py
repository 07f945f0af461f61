"""
Minimum-volume NFZ for an interference budget
=============================================

The optimal radius in each direction solves P*lambda*l(r)*g = mu, so
the surface bulges where drones are dense and the antenna listens. The
multiplier mu is tuned until the NFZ removes just enough interference.
"""

import math

import numpy as np

from nfzopt import (
    AngularGrid,
    BoundedPowerLaw,
    Budget,
    HemisphericalRegion,
    UlaPattern,
    build_optimal_nfz,
    default_breaks,
    expected_interference,
    banded_field,
    surface_volume,
)

field, ula, loss = banded_field(), UlaPattern(), BoundedPowerLaw(2.5)
grid = AngularGrid(128, 256, *default_breaks(ula, field))
outer = 1000.0

e_a = expected_interference(HemisphericalRegion(outer), field, ula, loss, 1.0, grid)
budget = Budget.from_cap(e_a, 0.5 * e_a)   # cap at half the unprotected level
nfz = build_optimal_nfz(budget, field, ula, loss, 1.0, grid, outer=outer)

print(f"E[I_A]={e_a:.4e}  mu={nfz.params['mu']:.4e}  volume={surface_volume(nfz):.4e}")

#########################################################################
# Two azimuth slices, as a table of elevation against radius.

for phi_deg in (90, 270):
    j = int(np.argmin(np.abs(grid.phi - math.radians(phi_deg))))
    print(f"\nphi ~ {phi_deg} deg")
    for i in range(0, grid.theta.size, 12):
        print(f"  theta={math.degrees(grid.theta[i]):5.1f}  r={nfz.radii[i, j]:8.2f}")
