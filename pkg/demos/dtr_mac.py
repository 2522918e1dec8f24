"""
Dynamic time-range MAC handshakes
=================================

The UE and AP hold the same pair of 128-bit words.  How long the device slept
decides how far the words rotate before they are mixed, so a tag only
verifies if both sides agree on the sleep interval.
"""

import numpy as np

from hisam import dtr_mac as dm

rng = np.random.default_rng(1)
sleep_unit = 0.5  # seconds
ap, ue = dm.session_pair(*dm.random_registration(rng), 0.0, sleep_unit)

# a few honest handshakes; the AP clock sees the message a little late
t = 0.0
for _ in range(5):
    t += rng.uniform(0.5, 20.0)
    arrival = t + rng.uniform(0.0, 0.4) * sleep_unit
    shift = dm.shift_bits_from_interval(ue.last_time, t, sleep_unit)
    ok = dm.handshake(ap, ue, t, arrival)
    print("t=%6.2f  shift %3d  ok=%s  words agree=%s" % (t, shift, ok, ap.state() == ue.state()))

# flip one bit of the first tag: the AP refuses and nothing moves
before = (ap.state(), ue.state())
t += 3.0
tag1, _ = dm.ue_initiate(ue, t)
bad = bytes([tag1[0] ^ 1]) + tag1[1:]
print("tampered tag accepted:", dm.ap_verify_initiation(ap, bad, t)[0])
print("state unchanged:", (ap.state(), ue.state()) == before)

# an interval off by two sleep units lands outside the AP's window
print("severe jitter accepted:", dm.handshake(ap, ue, t, t + 2.2 * sleep_unit))

# the oversleep ledger: credit one per authentication, deduct past 2 units
ledger = dm.PenaltyLedger(oversleep_limit=2)
for gap in (0.5, 1.0, 1.0, 3.2):
    ledger = dm.record_authentication(ledger, gap, sleep_unit)
    print("slept %.1fs -> workload %+.0f evicted=%s" % (gap, ledger.workload, ledger.evicted))
