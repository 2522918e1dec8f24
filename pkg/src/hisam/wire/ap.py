"""Access-point service: registration, negotiation barrier, DTR-MAC handshakes."""
from __future__ import annotations

import asyncio
import logging
import time
from dataclasses import dataclass, field

from .. import dtr_mac
from ..errors import HiSamError, NegotiationError, ProtocolError
from ..mfg import EquilibriumResult, Negotiator
from ..params import SystemParams
from .frames import (
    ALPHA_BODY, BROADCAST_BODY, EVICT_BODY, REGISTER_BODY, STATUS_BODY,
    Frame, FrameKind, encode_frame, expect, read_frame,
)

log = logging.getLogger(__name__)

CONTINUE, CONVERGED, FAILED = 0, 1, 2


@dataclass
class _Peer:
    device_id: int
    demand: float
    reader: asyncio.StreamReader
    writer: asyncio.StreamWriter
    session: dtr_mac.AuthSession | None = None
    ledger: dtr_mac.PenaltyLedger = field(default_factory=dtr_mac.PenaltyLedger)


class APService:
    """Serves one population of ``params.n_devices`` UEs.

    Negotiation starts once every expected device has registered.  Afterwards
    each connection runs handshakes independently.  ``transcript`` records
    every frame as ``(device_id, "rx"|"tx", bytes)``.
    """

    def __init__(self, params: SystemParams, credentials, sleep_unit,
                 oversleep_limit=2, clock=time.monotonic):
        self.params = params
        self.credentials = credentials
        self.sleep_unit = sleep_unit
        self.oversleep_limit = oversleep_limit
        self.clock = clock
        self.peers: dict[int, _Peer] = {}
        self.ledgers: dict[int, dtr_mac.PenaltyLedger] = {}
        self.transcript: list = []
        self.result: EquilibriumResult | None = None
        self.negotiation_error: Exception | None = None
        self.negotiated = asyncio.Event()
        self._negotiation: asyncio.Task | None = None

    async def _send(self, peer: _Peer, kind, payload=b""):
        data = encode_frame(kind, payload)
        self.transcript.append((peer.device_id, "tx", data))
        peer.writer.write(data)
        await peer.writer.drain()

    async def _recv(self, peer: _Peer) -> Frame:
        frame = await read_frame(peer.reader)
        self.transcript.append((peer.device_id, "rx", encode_frame(frame.kind, frame.payload)))
        return frame

    async def handle(self, reader, writer):
        peer = None
        try:
            peer = await self._register(reader, writer)
            if peer is None:
                return
            await self.negotiated.wait()
            if self.result is None:
                return
            await self._authenticate(peer)
        except (asyncio.IncompleteReadError, ConnectionError):
            pass
        except ProtocolError as exc:
            log.warning("closing session %s: %s", getattr(peer, "device_id", "?"), exc)
        finally:
            writer.close()

    async def _register(self, reader, writer):
        frame = await read_frame(reader)
        device_id, demand = expect(frame, FrameKind.REGISTER, REGISTER_BODY)
        tmp = _Peer(device_id, demand, reader, writer)
        self.transcript.append((device_id, "rx", encode_frame(frame.kind, frame.payload)))
        ok = (device_id not in self.peers and device_id in self.credentials
              and demand > 0 and self._negotiation is None)
        await self._send(tmp, FrameKind.REGISTER, STATUS_BODY.pack(int(ok)))
        if not ok:
            return None
        self.peers[device_id] = tmp
        if len(self.peers) == self.params.n_devices:
            self._negotiation = asyncio.ensure_future(self._negotiate())
        return tmp

    async def _negotiate(self):
        order = [self.peers[k] for k in sorted(self.peers)]
        try:
            neg = Negotiator([p.demand for p in order], self.params)
            f_m = self.params.f_m
            while not neg.done:
                body = BROADCAST_BODY.pack(neg.x_pop, neg.total_resource, f_m, CONTINUE)
                await asyncio.gather(*(self._send(p, FrameKind.NEGOTIATE_BROADCAST, body) for p in order))
                frames = await asyncio.gather(*(self._recv(p) for p in order))
                neg.update([expect(f, FrameKind.ALPHA_REPORT, ALPHA_BODY)[0] for f in frames])
            flag = CONVERGED if neg.trace.converged else FAILED
            body = BROADCAST_BODY.pack(neg.x_pop, neg.total_resource, f_m, flag)
            await asyncio.gather(*(self._send(p, FrameKind.NEGOTIATE_BROADCAST, body) for p in order))
            self.result = neg.result()
            start = self.clock()
            for p in order:
                c = self.credentials[p.device_id]
                p.session = dtr_mac.AuthSession(c.m0_ue, c.m0_ap, c.key, start,
                                                self.sleep_unit, dtr_mac.Role.AP)
                p.ledger = dtr_mac.PenaltyLedger(self.oversleep_limit)
                self.ledgers[p.device_id] = p.ledger
        except (HiSamError, asyncio.IncompleteReadError, ConnectionError) as exc:
            self.negotiation_error = exc
            self.result = None
            if not isinstance(exc, NegotiationError):
                log.warning("negotiation aborted: %s", exc)
        finally:
            self.negotiated.set()

    async def _authenticate(self, peer: _Peer):
        s = peer.session
        while True:
            try:
                frame = await self._recv(peer)
            except asyncio.IncompleteReadError:
                return
            tag = expect(frame, FrameKind.AUTH1)
            if len(tag) != dtr_mac.TAG_BYTES:
                raise ProtocolError("AUTH1 payload must be a 32-byte tag")
            arrival = self.clock()
            prev = s.last_time
            ok, b = dtr_mac.ap_verify_initiation(s, tag, arrival)
            if not ok:
                await self._send(peer, FrameKind.AUTH2)
                continue
            await self._send(peer, FrameKind.AUTH2, dtr_mac.ap_respond(s, b))
            reply = expect(await self._recv(peer), FrameKind.AUTH3)
            if not reply:
                s.pending = None  # UE refused our tag
                await self._send(peer, FrameKind.AUTH3, STATUS_BODY.pack(0))
                continue
            if len(reply) != dtr_mac.TAG_BYTES:
                raise ProtocolError("AUTH3 payload must be a 32-byte tag")
            if not dtr_mac.ap_finalize(s, reply):
                await self._send(peer, FrameKind.AUTH3, STATUS_BODY.pack(0))
                continue
            peer.ledger = dtr_mac.record_authentication(peer.ledger, arrival - prev, self.sleep_unit)
            self.ledgers[peer.device_id] = peer.ledger
            if peer.ledger.evicted:
                await self._send(peer, FrameKind.EVICT, EVICT_BODY.pack(peer.ledger.workload))
                return
            await self._send(peer, FrameKind.AUTH3, STATUS_BODY.pack(1))


async def ap_service_loop(service: APService, host="127.0.0.1", port=0, started=None):
    """Listen until cancelled.  ``started`` (a future) receives the bound port."""
    server = await asyncio.start_server(service.handle, host, port)
    if started is not None:
        started.set_result(server.sockets[0].getsockname()[1])
    async with server:
        await server.serve_forever()
