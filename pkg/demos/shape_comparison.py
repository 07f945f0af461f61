"""
Optimal shape against domes and cylinders
=========================================

At equal volume the optimal NFZ always removes at least as much
interference as a dome or the best cylinder. The gap is the price of
using a shape that ignores where the drones are.
"""

import numpy as np

from nfzopt import (
    AngularGrid,
    BoundedPowerLaw,
    UlaPattern,
    compare_shapes,
    default_breaks,
    banded_field,
)

field, ula, loss = banded_field(), UlaPattern(), BoundedPowerLaw(2.5)
grid = AngularGrid(64, 128, *default_breaks(ula, field))

print(f"{'volume':>10} {'optimal':>11} {'dome':>11} {'cylinder':>11}")
for v in np.geomspace(1e5, 1e8, 4):
    res = {r.shape: r.eliminated for r in compare_shapes(v, field, ula, loss, 1.0, grid, outer=1000.0)}
    print(f"{v:10.3g} {res['optimal']:11.4e} {res['dome']:11.4e} {res['cylinder']:11.4e}")
