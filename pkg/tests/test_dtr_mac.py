import math
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hisam import dtr_mac as dm
from hisam.errors import DomainError, EvictedError, ProtocolError

TS = 0.5


def fresh_pair(seed=0, start=0.0, sleep_unit=TS):
    m_ue, m_ap, key = dm.random_registration(np.random.default_rng(seed))
    return dm.session_pair(m_ue, m_ap, key, start, sleep_unit)


def flip(tag, bit):
    b = bytearray(tag)
    b[bit // 8] ^= 1 << (bit % 8)
    return bytes(b)


class TestWords:
    @pytest.mark.parametrize("dt,expected", [(0.0, 0), (2.6, 3), (2.4, 2), (2.5, 3)])
    def test_shift_rounding(self, dt, expected):
        assert dm.shift_bits_from_interval(10.0, 10.0 + dt * TS, TS) == expected

    def test_clock_regression(self):
        with pytest.raises(DomainError):
            dm.shift_bits_from_interval(5.0, 4.0, TS)
        with pytest.raises(DomainError):
            dm.shift_bits_from_interval(0.0, 1.0, 0.0)

    @settings(max_examples=200)
    @given(st.integers(0, dm.WORD_MASK), st.integers(0, 1000))
    def test_rotation_identities(self, w, b):
        assert dm.circular_shift(w, 0) == w
        assert dm.circular_shift(w, 128) == w
        assert dm.circular_shift(dm.circular_shift(w, b), 128 - b % 128) == w
        assert bin(dm.circular_shift(w, b)).count("1") == bin(w).count("1")

    def test_rotation_is_left(self):
        assert dm.circular_shift(1, 3) == 8
        assert dm.circular_shift(1 << 127, 1) == 1

    def test_derivation_identities(self):
        ap, ue = fresh_pair()
        m = ue.ue_msg
        ue.ap_msg = 0
        assert dm.derive_next_ue_message(ue, 0) == m
        ue.ap_msg = dm.circular_shift(m, 7)
        assert dm.derive_next_ue_message(ue, 7) == 0
        assert dm.derive_next_ue_message(ue, 7) == dm.derive_next_ue_message(ue, 7)

        m_ap = ap.ap_msg
        ap.ue_msg = 0
        assert dm.derive_next_ap_message(ap, 0) == m_ap

    def test_ap_derivation_agrees_across_roles(self):
        ap, ue = fresh_pair(3)
        for b in (0, 1, 5, 127, 300):
            assert dm.derive_next_ap_message(ap, b) == dm.derive_next_ap_message(ue, b)

    def test_ap_derivation_bijective(self):
        ap, _ = fresh_pair(4)
        rng = np.random.default_rng(0)
        outs = set()
        for _ in range(500):
            ap.ap_msg = int.from_bytes(rng.bytes(16), "big") | 1
            outs.add((ap.ap_msg, dm.derive_next_ap_message(ap, 9)))
        assert len({o for _, o in outs}) == len({i for i, _ in outs})

    def test_word_serialization(self):
        assert dm.word_bytes(1) == b"\x00" * 15 + b"\x01"
        assert dm.word_from_bytes(dm.word_bytes(dm.WORD_MASK)) == dm.WORD_MASK
        with pytest.raises(DomainError):
            dm.word_from_bytes(b"\x00" * 15)


class TestTags:
    def test_known_answer(self):
        # RFC 4231 test case 2
        tag = dm.compute_tag(b"what do ya want for nothing?", b"Jefe")
        assert tag.hex() == "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843"

    def test_deterministic_and_collision_free(self):
        rng = np.random.default_rng(1)
        key = rng.bytes(32)
        seen = set()
        for _ in range(10_000):
            msg = rng.bytes(16)
            tag = dm.compute_tag(msg, key)
            assert len(tag) == dm.TAG_BYTES
            assert dm.compute_tag(msg, key) == tag
            seen.add((msg, tag))
        assert len({t for _, t in seen}) == len({m for m, _ in seen})


class TestHandshake:
    def test_zero_sleep_tag(self):
        ap, ue = fresh_pair()
        tag1, pending = dm.ue_initiate(ue, 0.0)
        assert pending.shift == 0
        assert tag1 == dm.compute_tag(dm.word_bytes(ue.ue_msg ^ ue.ap_msg), ue.key)
        assert dm.ap_verify_initiation(ap, tag1, 0.0) == (True, 0)

    def test_no_premature_commit(self):
        _, ue = fresh_pair()
        before = ue.state()
        a, _ = dm.ue_initiate(ue, 3.0)
        b, _ = dm.ue_initiate(ue, 3.0)
        assert a == b and ue.state() == before

    def test_round_trip_with_jitter(self):
        rng = np.random.default_rng(7)
        ap, ue = fresh_pair(7)
        t = 0.0
        t0 = time.perf_counter()
        for step in range(1, 1001):
            t += rng.uniform(0, 300) * TS
            arrival = t + rng.uniform(-0.4, 0.4) * TS
            assert dm.handshake(ap, ue, t, max(arrival, ap.last_time))
            assert ap.state() == ue.state()
            assert ue.step_index == step
        assert time.perf_counter() - t0 < 5.0

    def test_response_tag_differs_from_initiation(self):
        for seed in range(200):
            ap, ue = fresh_pair(seed)
            tag1, _ = dm.ue_initiate(ue, seed * TS)
            ok, b = dm.ap_verify_initiation(ap, tag1, seed * TS)
            assert ok
            tag2 = dm.ap_respond(ap, b)
            assert tag2 != tag1
            assert dm.ap_respond(ap, b) == tag2

    @pytest.mark.parametrize("which", [1, 2, 3])
    def test_single_bit_tamper(self, which):
        rng = np.random.default_rng(which)
        for bit in rng.choice(256, 24, replace=False):
            ap, ue = fresh_pair(int(bit))
            before = (ap.state(), ue.state(), ap.last_time, ue.last_time)
            t = 7.0 * TS
            tag1, _ = dm.ue_initiate(ue, t)
            if which == 1:
                ok, _ = dm.ap_verify_initiation(ap, flip(tag1, bit), t)
                assert not ok
            else:
                ok, b = dm.ap_verify_initiation(ap, tag1, t)
                tag2 = dm.ap_respond(ap, b)
                if which == 2:
                    ok, tag3 = dm.ue_verify_response_and_finalize(ue, flip(tag2, bit))
                    assert not ok and tag3 is None
                else:
                    ok, tag3 = dm.ue_verify_response_and_finalize(ue, tag2)
                    assert ok
                    assert not dm.ap_finalize(ap, flip(tag3, bit))
                    dm.ue_rollback(ue)
            assert (ap.state(), ue.state(), ap.last_time, ue.last_time) == before
            # replay of the full exchange still succeeds afterwards
            assert dm.handshake(ap, ue, t)
            assert ap.state() == ue.state()

    def test_forgeries_rejected(self):
        rng = np.random.default_rng(11)
        ap, _ = fresh_pair(11)
        before = ap.state()
        accepted = sum(dm.ap_verify_initiation(ap, rng.bytes(32), rng.uniform(0, 50))[0]
                       for _ in range(10_000))
        assert accepted == 0
        assert ap.state() == before

    def test_clock_offset_invariance(self):
        def transcript(offset):
            ap, ue = fresh_pair(5, start=offset)
            rng = np.random.default_rng(5)
            t, out = offset, []
            for _ in range(50):
                t += rng.uniform(0, 40) * TS
                tag1, _ = dm.ue_initiate(ue, t)
                ok, b = dm.ap_verify_initiation(ap, tag1, t + 0.1 * TS)
                tag2 = dm.ap_respond(ap, b)
                _, tag3 = dm.ue_verify_response_and_finalize(ue, tag2)
                assert dm.ap_finalize(ap, tag3)
                out.append((tag1, tag2, tag3))
            return out

        assert transcript(0.0) == transcript(1024.0)

    def test_severe_jitter_rejected(self):
        ap, ue = fresh_pair(2)
        assert not dm.handshake(ap, ue, 10 * TS, 12.6 * TS)
        assert ap.state() == ue.state()

    def test_replayed_initiation_rejected_after_commit(self):
        ap, ue = fresh_pair(9)
        tag1, _ = dm.ue_initiate(ue, 4 * TS)
        ok, b = dm.ap_verify_initiation(ap, tag1, 4 * TS)
        _, tag3 = dm.ue_verify_response_and_finalize(ue, dm.ap_respond(ap, b))
        assert dm.ap_finalize(ap, tag3)
        assert not dm.ap_verify_initiation(ap, tag1, 8 * TS)[0]

    def test_role_and_order_checks(self):
        ap, ue = fresh_pair()
        with pytest.raises(ProtocolError):
            dm.ue_initiate(ap, 1.0)
        with pytest.raises(ProtocolError):
            dm.ap_respond(ap, 0)
        with pytest.raises(ProtocolError):
            dm.ue_verify_response_and_finalize(ue, b"\x00" * 32)
        with pytest.raises(ProtocolError):
            dm.ue_rollback(ue)

    def test_evicted_device_cannot_initiate(self):
        _, ue = fresh_pair()
        ue.evicted = True
        with pytest.raises(EvictedError):
            dm.ue_initiate(ue, 1.0)

    def test_registration_checks(self):
        key = bytes(32)
        with pytest.raises(DomainError):
            dm.AuthSession(0, 5, key, 0.0, TS, dm.Role.UE)
        with pytest.raises(DomainError):
            dm.AuthSession(3, 5, key[:16], 0.0, TS, dm.Role.UE)
        with pytest.raises(DomainError):
            dm.AuthSession(3, 1 << 128, key, 0.0, TS, dm.Role.AP)


class TestPenalty:
    def test_examples(self):
        led = dm.PenaltyLedger(oversleep_limit=2, workload=5.0)
        assert dm.apply_oversleep_penalty(led, 2 * TS, TS).workload == 5.0
        assert dm.apply_oversleep_penalty(led, 4.5 * TS, TS).workload == 2.0
        out = dm.apply_oversleep_penalty(dm.PenaltyLedger(2, 1.0), 4.5 * TS, TS)
        assert out.workload == -2.0 and out.evicted

    def test_float_boundary(self):
        # 0.3/0.1 is 2.9999999999999996 in binary; three units must still count as three
        led = dm.PenaltyLedger(2, 10.0)
        assert dm.apply_oversleep_penalty(led, 0.3, 0.1).workload == 9.0
        assert dm.apply_oversleep_penalty(led, 0.2, 0.1).workload == 10.0

    @settings(max_examples=300)
    @given(st.floats(0, 1e3), st.floats(0, 1e3), st.integers(1, 6), st.floats(0.01, 10))
    def test_monotone_and_exact(self, p1, p2, n, ts):
        led = dm.PenaltyLedger(n, 1e6)
        lo, hi = sorted((p1, p2))
        d_lo = led.workload - dm.apply_oversleep_penalty(led, lo, ts).workload
        d_hi = led.workload - dm.apply_oversleep_penalty(led, hi, ts).workload
        assert 0 <= d_lo <= d_hi
        units = lo / ts
        if units <= n - 1e-6:
            assert d_lo == 0
        elif units > n + 1e-6 and abs(units - round(units)) > 1e-6:
            assert d_lo == math.ceil(units) - n

    @settings(max_examples=300)
    @given(st.floats(-5, 20), st.floats(0, 50), st.integers(1, 4))
    def test_eviction_iff_negative(self, w, p, n):
        out = dm.apply_oversleep_penalty(dm.PenaltyLedger(n, w), p, 1.0)
        assert out.evicted == (out.workload < 0)

    def test_eviction_is_sticky(self):
        led = dm.PenaltyLedger(2, 0.0, evicted=True)
        assert dm.credit(led, 5).evicted

    @settings(max_examples=200)
    @given(st.floats(0.01, 100), st.floats(0.1, 10), st.integers(1, 4))
    def test_active_device_neutrality(self, alpha_excess, ts, n):
        # a device authenticating faster than once per sleep unit never oversleeps
        alpha = (1 / ts) * (1 + alpha_excess)
        led = dm.PenaltyLedger(n, 0.0)
        for _ in range(20):
            led = dm.record_authentication(led, 1 / alpha, ts)
        assert led.workload == 20 and not led.evicted

    def test_record_authentication_credits_first(self):
        out = dm.record_authentication(dm.PenaltyLedger(2, 0.0), 3 * TS, TS)
        assert out.workload == 0 and not out.evicted


class TestVectors:
    def test_deterministic_and_reverifiable(self):
        header, records = dm.conformance_vectors(seed=3, steps=12, sleep_unit=TS)
        assert dm.conformance_vectors(seed=3, steps=12, sleep_unit=TS) == (header, records)
        key = bytes.fromhex(header["key"])
        m_ue = int(header["m0_ue"], 16)
        m_ap = int(header["m0_ap"], 16)
        for step, shift, ue_hex, ap_hex, t1, t2, t3 in records:
            n_ue = dm.circular_shift(m_ue, shift) ^ m_ap
            n_ap = dm.circular_shift(m_ap, shift) ^ m_ue
            assert dm.word_bytes(n_ue).hex() == ue_hex and dm.word_bytes(n_ap).hex() == ap_hex
            assert dm.compute_tag(dm.word_bytes(n_ue), key).hex() == t1
            assert dm.compute_tag(dm.word_bytes(n_ue) + dm.word_bytes(n_ap), key).hex() == t2
            assert dm.compute_tag(dm.word_bytes(n_ap), key).hex() == t3
            m_ue, m_ap = n_ue, n_ap
        assert len(records) == 12
