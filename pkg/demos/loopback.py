"""
AP and devices over TCP
=======================

One AP process-equivalent and 20 device clients on localhost.  The devices
negotiate their frequencies over the wire, then authenticate a few times.
Device 0 oversleeps and gets evicted.
"""

import asyncio
import math

import numpy as np

from hisam.mfg import negotiate_equilibrium
from hisam.params import SystemParams
from hisam.sim import sample_demands
from hisam.wire import run_loopback

params = SystemParams(20)
demands = sample_demands(10.0, math.sqrt(3), 20, seed=0)
sleep_unit = 0.02  # seconds, so the demo finishes quickly

sleeps = {i: [sleep_unit] * 3 for i in range(1, 20)}
sleeps[0] = [sleep_unit, 6 * sleep_unit]

service, outcomes = asyncio.run(run_loopback(params, demands, sleep_unit, sleeps))

alphas = np.array([o.alpha for o in outcomes])
print("wire alphas equal in-process:", np.array_equal(alphas, negotiate_equilibrium(demands, params).alphas))
print("negotiation rounds:", service.result.trace.rounds)
for o in outcomes[:4]:
    led = service.ledgers[o.device_id]
    print("device %d  alpha %.3f  accepted %d  rejected %d  workload %+.0f  evicted %s"
          % (o.device_id, o.alpha, o.accepted, o.rejected, led.workload, led.evicted))
