"""Device-side client: register, answer negotiation rounds, authenticate."""
from __future__ import annotations

import asyncio
import time
from dataclasses import dataclass

from .. import dtr_mac
from ..errors import DomainError, ProtocolError
from ..mfg import optimal_alpha
from ..params import DeviceProfile, SystemParams
from .ap import CONTINUE, CONVERGED
from .credentials import Credentials
from .frames import (
    ALPHA_BODY, BROADCAST_BODY, EVICT_BODY, REGISTER_BODY, STATUS_BODY,
    FrameKind, encode_frame, expect, read_frame,
)


@dataclass
class UEOutcome:
    device_id: int
    status: str = "ok"  # ok | rejected | domain_error | negotiation_failed | protocol_error | disconnected
    alpha: float | None = None
    accepted: int = 0
    rejected: int = 0
    evicted: bool = False
    session: dtr_mac.AuthSession | None = None
    detail: str = ""

    @property
    def resumable(self):
        return self.status == "disconnected"


async def ue_client_loop(reader, writer, profile: DeviceProfile, credentials: Credentials,
                         params: SystemParams, sleep_unit, sleeps,
                         clock=time.monotonic, sleep=asyncio.sleep) -> UEOutcome:
    """Run one device session.

    ``sleeps`` lists the idle time before each authentication.  Losing the
    connection returns a ``disconnected`` outcome that still carries the
    committed session state.
    """
    out = UEOutcome(profile.id)

    async def send(kind, payload=b""):
        writer.write(encode_frame(kind, payload))
        await writer.drain()

    try:
        await send(FrameKind.REGISTER, REGISTER_BODY.pack(profile.id, profile.demand))
        (ok,) = expect(await read_frame(reader), FrameKind.REGISTER, STATUS_BODY)
        if not ok:
            out.status = "rejected"
            return out

        while True:
            x_pop, total, f_m, flag = expect(await read_frame(reader),
                                             FrameKind.NEGOTIATE_BROADCAST, BROADCAST_BODY)
            if flag != CONTINUE:
                break
            try:
                alpha = float(optimal_alpha(profile.demand, x_pop, params, total, f_m=f_m))
            except DomainError as exc:
                out.status, out.detail = "domain_error", str(exc)
                return out
            out.alpha = alpha
            await send(FrameKind.ALPHA_REPORT, ALPHA_BODY.pack(alpha))
        if flag != CONVERGED:
            out.status = "negotiation_failed"
            return out
        profile.alpha = out.alpha

        s = dtr_mac.AuthSession(credentials.m0_ue, credentials.m0_ap, credentials.key,
                                clock(), sleep_unit, dtr_mac.Role.UE)
        out.session = s
        for dt in sleeps:
            await sleep(dt)
            tag1, _ = dtr_mac.ue_initiate(s, clock())
            await send(FrameKind.AUTH1, tag1)
            tag2 = expect(await read_frame(reader), FrameKind.AUTH2)
            if not tag2:
                s.pending = None
                out.rejected += 1
                continue
            ok, tag3 = dtr_mac.ue_verify_response_and_finalize(s, tag2)
            await send(FrameKind.AUTH3, tag3 if ok else b"")
            reply = await read_frame(reader)
            if reply.kind is FrameKind.EVICT:
                (workload,) = expect(reply, FrameKind.EVICT, EVICT_BODY)
                out.accepted += 1
                out.evicted = s.evicted = True
                profile.workload = max(workload, 0.0)
                break
            (acked,) = expect(reply, FrameKind.AUTH3, STATUS_BODY)
            if ok and acked:
                out.accepted += 1
            else:
                if ok:
                    dtr_mac.ue_rollback(s)
                out.rejected += 1
        return out
    except (asyncio.IncompleteReadError, ConnectionError) as exc:
        out.status, out.detail = "disconnected", str(exc) or type(exc).__name__
        return out
    except ProtocolError as exc:
        out.status, out.detail = "protocol_error", str(exc)
        return out
    finally:
        writer.close()
