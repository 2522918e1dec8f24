"""One AP and a population of UEs over local TCP, for tests and demos."""
from __future__ import annotations

import asyncio
import time

from ..params import DeviceProfile, SystemParams
from .ap import APService, ap_service_loop
from .credentials import provision_credentials
from .ue import ue_client_loop


class ManualClock:
    """Virtual time that only moves when a coroutine sleeps on it."""

    def __init__(self, start=0.0):
        self.now = start

    def __call__(self):
        return self.now

    async def sleep(self, dt):
        self.now += dt
        await asyncio.sleep(0)


async def run_loopback(params: SystemParams, demands, sleep_unit, sleeps=None,
                       master=b"loopback", oversleep_limit=2, clock=None, sleep=None):
    """Serve ``len(demands)`` devices on an ephemeral port.

    ``sleeps`` maps device id to the idle times before each authentication.
    Device ids are 0..N-1.  Returns ``(service, outcomes)`` with outcomes in
    id order.
    """
    clock = clock or time.monotonic
    sleep = sleep or asyncio.sleep
    sleeps = sleeps or {}
    creds = {i: provision_credentials(master, i) for i in range(len(demands))}
    service = APService(params, creds, sleep_unit, oversleep_limit, clock=clock)
    started = asyncio.get_running_loop().create_future()
    server = asyncio.ensure_future(ap_service_loop(service, port=0, started=started))
    port = await started

    async def device(i, r):
        reader, writer = await asyncio.open_connection("127.0.0.1", port)
        return await ue_client_loop(reader, writer, DeviceProfile(i, float(r)), creds[i],
                                    params, sleep_unit, sleeps.get(i, ()), clock, sleep)

    try:
        outcomes = await asyncio.gather(*(device(i, r) for i, r in enumerate(demands)))
    finally:
        server.cancel()
        try:
            await server
        except asyncio.CancelledError:
            pass
    return service, list(outcomes)
