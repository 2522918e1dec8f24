"""Pre-shared registration state.

Key establishment is out of band; for demos and tests both sides derive the
same per-device state from a shared master secret.
"""
from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass

from ..dtr_mac import KEY_BYTES, WORD_BYTES


@dataclass(frozen=True)
class Credentials:
    key: bytes
    m0_ue: int
    m0_ap: int


def provision_credentials(master: bytes, device_id: int) -> Credentials:
    def block(label):
        return hmac.new(master, b"%s:%d" % (label, device_id), hashlib.sha256).digest()

    words = block(b"words")
    m0_ue = int.from_bytes(words[:WORD_BYTES], "big") or 1
    m0_ap = int.from_bytes(words[WORD_BYTES:], "big") or 1
    return Credentials(key=block(b"key")[:KEY_BYTES], m0_ue=m0_ue, m0_ap=m0_ap)
