"""
Negotiating authentication frequencies
=======================================

A population of devices with Gaussian demands agrees on how often each one
authenticates.  The AP broadcasts the expected workload X, every device
answers with its best frequency, and the loop repeats until the answers stop
moving.
"""

import math

import numpy as np

from hisam.mfg import (
    allocate_resources,
    closed_form_equilibrium,
    contraction_coefficient,
    negotiate_equilibrium,
)
from hisam.params import SystemParams
from hisam.sim import sample_demands

# 100 devices, population cap 2000 and per-device cap 20 per time unit
params = SystemParams(100)
demands = sample_demands(10.0, math.sqrt(3), params.n_devices, seed=0)
print("demand range: %.2f .. %.2f" % (demands.min(), demands.max()))

# iterate the broadcast/report loop
result = negotiate_equilibrium(demands, params)
for k, (err, x) in enumerate(zip(result.trace.per_round_errors, result.trace.per_round_x), 1):
    print("round %2d  error %.3e  X %.6f" % (k, err, x))

# devices with larger demand ask for more frequent checks
order = np.argsort(demands)
print("lowest demand  -> alpha %.3f" % result.alphas[order[0]])
print("highest demand -> alpha %.3f" % result.alphas[order[-1]])

# the linearized aggregate map behind the contraction argument is a separate,
# cruder model of X; it contracts at rate c towards its own fixed point
c = contraction_coefficient(demands)
print("contraction coefficient c = %.5f (1/N = %.5f)" % (c, 1 / params.n_devices))
print("affine fixed point X = %.3f" % closed_form_equilibrium(demands, params))

# spread a pool of 500 resource units in proportion to frequency
share = allocate_resources(result.alphas, result.x_pop, params, 500.0).per_device_share
print("resource share: min %.3f  max %.3f" % (share.min(), share.max()))
