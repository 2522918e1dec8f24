"""Dynamic time-range MAC.

Message words are 128-bit integers.  Between two authentications both sides
turn the elapsed sleep time into a rotation count, rotate their copy of the
words, and XOR them together.  Only HMAC-SHA256 tags cross the wire:

    UE -> AP   tag1 = MAC(M_ue')
    AP -> UE   tag2 = MAC(M_ue' || M_ap')
    UE -> AP   tag3 = MAC(M_ap')

Neither side commits the evolved words until its own last check passes.
The UE commits on tag2 but keeps a snapshot so it can roll back if the AP
then refuses tag3.
"""
from __future__ import annotations

import hashlib
import hmac
import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import DomainError, EvictedError, ProtocolError

WORD_BITS = 128
WORD_BYTES = WORD_BITS // 8
WORD_MASK = (1 << WORD_BITS) - 1
KEY_BYTES = 32
TAG_BYTES = 32
#: candidate offsets tried around the AP's own shift estimate
SHIFT_WINDOW = (0, -1, 1)


class Role(str, Enum):
    AP = "ap"
    UE = "ue"


def word_bytes(word: int) -> bytes:
    return word.to_bytes(WORD_BYTES, "big")


def word_from_bytes(data: bytes) -> int:
    if len(data) != WORD_BYTES:
        raise DomainError(f"message word must be {WORD_BYTES} bytes")
    return int.from_bytes(data, "big")


def shift_bits_from_interval(t_prev, t_now, sleep_unit) -> int:
    """Sleep interval in units of ``sleep_unit``, rounded half up."""
    if not sleep_unit > 0:
        raise DomainError("sleep_unit must be positive")
    if t_now < t_prev:
        raise DomainError(f"clock went backwards: {t_now} < {t_prev}")
    return math.floor((t_now - t_prev) / sleep_unit + 0.5)


def circular_shift(word: int, count: int) -> int:
    """Rotate a 128-bit word left by ``count`` (mod 128)."""
    count %= WORD_BITS
    word &= WORD_MASK
    return ((word << count) | (word >> (WORD_BITS - count))) & WORD_MASK


def compute_tag(message: bytes, key: bytes) -> bytes:
    return hmac.new(key, message, hashlib.sha256).digest()


@dataclass
class _Pending:
    time: float
    shift: int
    next_ue: int
    next_ap: int | None = None


@dataclass
class AuthSession:
    """One side's view of the shared DTR-MAC state."""

    ue_msg: int
    ap_msg: int
    key: bytes
    last_time: float
    sleep_unit: float
    role: Role
    step_index: int = 0
    evicted: bool = False
    pending: _Pending | None = None
    _snapshot: tuple | None = None

    def __post_init__(self):
        self.role = Role(self.role)
        if len(self.key) != KEY_BYTES:
            raise DomainError(f"key must be {KEY_BYTES} bytes")
        for w in (self.ue_msg, self.ap_msg):
            if not 0 <= w <= WORD_MASK:
                raise DomainError("message words must fit in 128 bits")
        if self.ue_msg == 0 or self.ap_msg == 0:
            raise DomainError("all-zero registration words are not allowed")
        if not self.sleep_unit > 0:
            raise DomainError("sleep_unit must be positive")

    def state(self):
        """Committed state, comparable across the two roles."""
        return (self.ue_msg, self.ap_msg, self.step_index)

    def _commit(self, pending: _Pending):
        self.ue_msg, self.ap_msg = pending.next_ue, pending.next_ap
        self.last_time = pending.time
        self.step_index += 1
        self.pending = None


def session_pair(ue_msg, ap_msg, key, start_time, sleep_unit):
    """Matching AP- and UE-side sessions for pre-shared registration state."""
    ap = AuthSession(ue_msg, ap_msg, key, start_time, sleep_unit, Role.AP)
    ue = AuthSession(ue_msg, ap_msg, key, start_time, sleep_unit, Role.UE)
    return ap, ue


def derive_next_ue_message(session: AuthSession, shift: int) -> int:
    return circular_shift(session.ue_msg, shift) ^ session.ap_msg


def derive_next_ap_message(session: AuthSession, shift: int) -> int:
    return circular_shift(session.ap_msg, shift) ^ session.ue_msg


def _require(session, role):
    if session.role is not role:
        raise ProtocolError(f"operation needs a {role.value}-side session")


def ue_initiate(session: AuthSession, now):
    """Build message 1.  Returns ``(tag1, pending)``; nothing is committed."""
    _require(session, Role.UE)
    if session.evicted:
        raise EvictedError("device has been evicted")
    b = shift_bits_from_interval(session.last_time, now, session.sleep_unit)
    nxt = derive_next_ue_message(session, b)
    session.pending = _Pending(time=now, shift=b, next_ue=nxt)
    return compute_tag(word_bytes(nxt), session.key), session.pending


def ap_verify_initiation(session: AuthSession, tag: bytes, arrival):
    """Check message 1 against shift candidates around the AP's own estimate.

    Returns ``(accepted, matched_shift)``; ``matched_shift`` is None on
    rejection.
    """
    _require(session, Role.AP)
    session.pending = None
    b_hat = shift_bits_from_interval(session.last_time, arrival, session.sleep_unit)
    for off in SHIFT_WINDOW:
        b = b_hat + off
        if b < 0:
            continue
        cand = derive_next_ue_message(session, b)
        if hmac.compare_digest(compute_tag(word_bytes(cand), session.key), tag):
            session.pending = _Pending(time=arrival, shift=b, next_ue=cand)
            return True, b
    return False, None


def ap_respond(session: AuthSession, matched_shift: int) -> bytes:
    _require(session, Role.AP)
    p = session.pending
    if p is None or p.shift != matched_shift:
        raise ProtocolError("no accepted initiation for this shift")
    p.next_ap = derive_next_ap_message(session, matched_shift)
    return compute_tag(word_bytes(p.next_ue) + word_bytes(p.next_ap), session.key)


def ue_verify_response_and_finalize(session: AuthSession, tag: bytes):
    """Verify message 2; on success commit and return ``(True, tag3)``."""
    _require(session, Role.UE)
    p = session.pending
    if p is None:
        raise ProtocolError("no pending initiation")
    p.next_ap = derive_next_ap_message(session, p.shift)
    expected = compute_tag(word_bytes(p.next_ue) + word_bytes(p.next_ap), session.key)
    if not hmac.compare_digest(expected, tag):
        session.pending = None
        return False, None
    session._snapshot = (session.ue_msg, session.ap_msg, session.last_time, session.step_index)
    session._commit(p)
    return True, compute_tag(word_bytes(session.ap_msg), session.key)


def ue_rollback(session: AuthSession):
    """Undo the last UE commit after the AP refused message 3."""
    _require(session, Role.UE)
    if session._snapshot is None:
        raise ProtocolError("nothing to roll back")
    session.ue_msg, session.ap_msg, session.last_time, session.step_index = session._snapshot
    session._snapshot = None


def ap_finalize(session: AuthSession, reply: bytes) -> bool:
    _require(session, Role.AP)
    p = session.pending
    if p is None or p.next_ap is None:
        raise ProtocolError("ap_respond was not issued")
    ok = hmac.compare_digest(compute_tag(word_bytes(p.next_ap), session.key), reply)
    if ok:
        session._commit(p)
    session.pending = None
    return ok


@dataclass(frozen=True)
class PenaltyLedger:
    oversleep_limit: int = 2
    workload: float = 0.0
    evicted: bool = False


def credit(ledger: PenaltyLedger, amount=1.0) -> PenaltyLedger:
    return replace(ledger, workload=ledger.workload + amount)


def apply_oversleep_penalty(ledger: PenaltyLedger, sleep_period, sleep_unit) -> PenaltyLedger:
    """Deduct ceil(P_s/T_s) - n once the sleep exceeds n sleep units."""
    if not sleep_unit > 0:
        raise DomainError("sleep_unit must be positive")
    # round away float noise so an interval of exactly n units stays exempt
    units = round(sleep_period / sleep_unit, 9)
    workload = ledger.workload
    if units > ledger.oversleep_limit:
        workload -= math.ceil(units) - ledger.oversleep_limit
    return replace(ledger, workload=workload, evicted=ledger.evicted or workload < 0)


def record_authentication(ledger: PenaltyLedger, sleep_period, sleep_unit) -> PenaltyLedger:
    """Credit one authentication, then charge any oversleep."""
    return apply_oversleep_penalty(credit(ledger), sleep_period, sleep_unit)


def handshake(ap: AuthSession, ue: AuthSession, send_time, arrival_time=None):
    """Run all three messages in-process.  Returns True if both sides committed."""
    arrival_time = send_time if arrival_time is None else arrival_time
    tag1, _ = ue_initiate(ue, send_time)
    ok, b = ap_verify_initiation(ap, tag1, arrival_time)
    if not ok:
        ue.pending = None
        return False
    tag2 = ap_respond(ap, b)
    ok, tag3 = ue_verify_response_and_finalize(ue, tag2)
    if not ok:
        ap.pending = None
        return False
    if not ap_finalize(ap, tag3):
        ue_rollback(ue)
        return False
    return True


def random_registration(rng: np.random.Generator):
    """Nonzero message words and a key drawn from ``rng`` (for tests and demos)."""
    def word():
        while True:
            w = int.from_bytes(rng.bytes(WORD_BYTES), "big")
            if w:
                return w
    return word(), word(), rng.bytes(KEY_BYTES)


def conformance_vectors(seed=0, steps=16, sleep_unit=1.0):
    """Handshake transcript for cross-implementation checks.

    Returns ``(header, records)``; each record is
    ``(step, shift, m_ue_hex, m_ap_hex, tag1_hex, tag2_hex, tag3_hex)`` where
    the words are the state committed by that step.
    """
    rng = np.random.default_rng(seed)
    m_ue, m_ap, key = random_registration(rng)
    header = {
        "key": key.hex(),
        "m0_ue": word_bytes(m_ue).hex(),
        "m0_ap": word_bytes(m_ap).hex(),
        "sleep_unit": sleep_unit,
    }
    ap, ue = session_pair(m_ue, m_ap, key, 0.0, sleep_unit)
    t = 0.0
    records = []
    for step in range(1, steps + 1):
        t += float(rng.integers(0, 3 * WORD_BITS)) * sleep_unit
        tag1, pending = ue_initiate(ue, t)
        ok, b = ap_verify_initiation(ap, tag1, t)
        tag2 = ap_respond(ap, b)
        _, tag3 = ue_verify_response_and_finalize(ue, tag2)
        ap_finalize(ap, tag3)
        records.append((step, pending.shift, word_bytes(ue.ue_msg).hex(),
                        word_bytes(ue.ap_msg).hex(), tag1.hex(), tag2.hex(), tag3.hex()))
    return header, records
