"""
Array gain of the ground-station antenna
========================================

An 8-element uniform linear array with quarter-wavelength spacing points
its main lobe at the zenith and has a null 30 degrees off it. Drones
hovering in that null cost the station nothing.
"""

import math

import numpy as np

from nfzopt import Direction, UlaPattern, ula_gain

ula = UlaPattern(elements=8, spacing_ratio=0.25)

# the zenith is the 0/0 limit of the array factor
print("g(zenith) =", ula_gain(ula, Direction(0.0)))

for deg in (0, 10, 20, 30, 45, 60, 90):
    print(f"theta={deg:3d} deg  g={float(ula.gain(math.radians(deg))):.4f}")

# nulls the quadrature splits its panels at
print("null elevations (deg):", np.degrees(ula.theta_breaks()).round(3))
