"""
The triangular mean-field density
=================================

Each device's accumulated workload spreads over a triangle whose vertex moves
at the device's authentication rate.  We tabulate it and check mass and mean
numerically.
"""

import numpy as np

from hisam.mfg import MeanFieldTriangle, expected_population_workload, triangle_density
from hisam.params import SystemParams

alpha, f_m = 12.0, 20.0
tri = MeanFieldTriangle.unitized(alpha, f_m)
print("peak height %.4f at x = alpha*t" % tri.peak)

# a coarse table at three instants
x = np.linspace(-2.0, 22.0, 13)
for t in (0.25, 0.5, 1.0):
    print("t=%.2f" % t, np.round(triangle_density(tri, t, x), 4))

# Riemann sums for mass and mean at the focus time
xs, dx = np.linspace(-1.0, 21.0, 220_001, retstep=True)
m = triangle_density(tri, 1.0, xs)
print("mass %.6f   mean %.6f   (alpha+F_m)/3 = %.6f"
      % (m.sum() * dx, (xs * m).sum() * dx, (alpha + f_m) / 3))

# summing the means gives the population workload the AP broadcasts
params = SystemParams(4)
alphas = np.array([4.0, 8.0, 12.0, 16.0])
print("expected workload:", expected_population_workload(alphas, params))
