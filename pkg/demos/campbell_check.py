"""
Analytic interference against simulated drones
==============================================

Campbell's theorem gives the mean interference of a Poisson drone field in
closed form. Here the quadrature value is checked against the closed form
for a homogeneous field, then against Monte Carlo draws of a banded
non-homogeneous field outside an NFZ.
"""

import math

from nfzopt import (
    AngularGrid,
    BoundedPowerLaw,
    ConstantPattern,
    HemisphericalRegion,
    HomogeneousField,
    UlaPattern,
    default_breaks,
    expected_interference,
    banded_field,
    run_replications,
)

loss = BoundedPowerLaw(2.5)
lam, radius = 1e-5, 50.0
quad = expected_interference(HemisphericalRegion(radius), HomogeneousField(lam),
                             ConstantPattern(1.0), loss, 1.0, AngularGrid())
closed = 2 * math.pi * lam * (1 / 3 + (radius**0.5 - 1) / 0.5)
print(f"quadrature {quad:.12e}\nclosed form {closed:.12e}")

#########################################################################
# A shell between 100 and 600 units, non-homogeneous field, ULA receiver.

field, ula = banded_field(), UlaPattern()
grid = AngularGrid(128, 256, *default_breaks(ula, field))
shell = HemisphericalRegion(600.0, 100.0)
analytic = expected_interference(shell, field, ula, loss, 1.0, grid)
mc = run_replications(shell, field, ula, loss, 1.0, 2000, seed=11, threads=4)
print(f"analytic {analytic:.4e}  simulated {mc.mean:.4e} +- {mc.stderr:.1e}  z={mc.zscore(analytic):+.2f}")
