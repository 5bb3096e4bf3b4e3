import os
import sys

import numpy as np
import pytest

os.environ.setdefault("LOG_DIR", os.path.join(os.path.dirname(os.path.abspath(__file__)), "_logs"))

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from qres.errors import InvalidGroupElement, LengthMismatch, OtFailure
from qres.mpc.ot import (
    PAYLOAD_LEN,
    concat_elements,
    ot_batch,
    ot_receive,
    ot_receiver_choose,
    ot_sender_respond,
    ot_sender_setup,
    split_elements,
    try_open_slot,
)


def _pair(rng):
    return rng.bytes(16), rng.bytes(16)


class TestObliviousTransfer:
    @pytest.mark.parametrize("bit", [0, 1])
    def test_receiver_gets_chosen_message_only(self, rng, bit):
        m0, m1 = _pair(rng)
        sstate, A = ot_sender_setup(rng)
        rstate, B = ot_receiver_choose(bit, A, rng)
        payload = ot_sender_respond(sstate, B, m0, m1, 3)
        assert len(payload) == PAYLOAD_LEN
        assert ot_receive(rstate, payload, 3) == (m1 if bit else m0)
        assert try_open_slot(rstate, payload, 1 - bit, 3) is None

    def test_many_transfers(self, rng):
        bits = rng.bits(200)
        pairs = [_pair(rng) for _ in bits]
        got = ot_batch(bits, pairs, rng)
        assert got == [p[b] for b, p in zip(bits, pairs)]

    def test_index_binds_the_payload(self, rng):
        m0, m1 = _pair(rng)
        sstate, A = ot_sender_setup(rng)
        rstate, B = ot_receiver_choose(0, A, rng)
        payload = ot_sender_respond(sstate, B, m0, m1, 0)
        with pytest.raises(OtFailure):
            ot_receive(rstate, payload, 1)

    def test_tampered_payload(self, rng):
        m0, m1 = _pair(rng)
        sstate, A = ot_sender_setup(rng)
        rstate, B = ot_receiver_choose(1, A, rng)
        payload = bytearray(ot_sender_respond(sstate, B, m0, m1))
        payload[-1] ^= 0x80
        with pytest.raises(OtFailure):
            ot_receive(rstate, bytes(payload))
        with pytest.raises(OtFailure):
            ot_receive(rstate, bytes(payload[:-1]))

    def test_choice_message_reveals_nothing_by_itself(self, rng):
        # B is a uniformly random group element under either choice
        _, A = ot_sender_setup(rng)
        seen = {ot_receiver_choose(b, A, rng)[1] for b in (0, 1, 0, 1)}
        assert len(seen) == 4

    def test_invalid_sender_element(self, rng):
        with pytest.raises(InvalidGroupElement):
            ot_receiver_choose(0, bytes(32), rng)

    def test_labels_must_be_sixteen_bytes(self, rng):
        sstate, A = ot_sender_setup(rng)
        _, B = ot_receiver_choose(0, A, rng)
        with pytest.raises(LengthMismatch):
            ot_sender_respond(sstate, B, b"short", bytes(16))

    def test_batch_lengths(self, rng):
        with pytest.raises(LengthMismatch):
            ot_batch([0, 1], [_pair(rng)], rng)

    def test_transcript_records_choice_messages(self, rng):
        transcript = []
        ot_batch([1, 0, 1], [_pair(rng) for _ in range(3)], rng, transcript)
        assert len(transcript) == 3
        assert all(len(t) == 32 for t in transcript)

    def test_element_framing(self, rng):
        elements = [ot_sender_setup(rng)[1] for _ in range(3)]
        assert split_elements(concat_elements(elements), 3) == elements
        with pytest.raises(LengthMismatch):
            split_elements(concat_elements(elements), 2)


TRIALS = 10_000


def _better_than_chance(predicted, labels) -> float:
    acc = float(np.mean(predicted == labels))
    return max(acc, 1.0 - acc)


class TestAtScale:
    def test_ten_thousand_transfers(self, rng):
        bits = rng.bits(TRIALS)
        pairs = [_pair(rng) for _ in bits]
        assert ot_batch(bits, pairs, rng) == [p[b] for b, p in zip(bits, pairs)]

    def test_unchosen_slot_never_opens(self, rng):
        bits = rng.bits(TRIALS)
        opened = 0
        for i, bit in enumerate(bits):
            m0, m1 = _pair(rng)
            sstate, A = ot_sender_setup(rng)
            rstate, B = ot_receiver_choose(bit, A, rng)
            payload = ot_sender_respond(sstate, B, m0, m1, i)
            assert try_open_slot(rstate, payload, bit, i) == (m1 if bit else m0)
            if try_open_slot(rstate, payload, 1 - bit, i) is not None:
                opened += 1
        assert opened == 0

    def test_choice_messages_do_not_reveal_the_bit(self, rng):
        _, A = ot_sender_setup(rng)
        labels = np.array(rng.bits(TRIALS), dtype=np.uint8)
        raw = b"".join(ot_receiver_choose(int(b), A, rng)[1] for b in labels)
        msgs = np.frombuffer(raw, dtype=np.uint8).reshape(TRIALS, 32)

        fixed_rules = {
            "first byte parity": msgs[:, 0] & 1,
            "first byte high bit": msgs[:, 0] >> 7,
            "sign bit": msgs[:, 31] >> 7,
            "popcount": (np.unpackbits(msgs, axis=1).sum(axis=1) >= 128).astype(np.uint8),
        }
        for name, predicted in fixed_rules.items():
            assert _better_than_chance(predicted, labels) <= 0.52, name

        # first-byte frequency table learned on one half, scored on the other
        half = TRIALS // 2
        first = msgs[:, 0].astype(np.int64)
        ones = np.bincount(first[:half][labels[:half] == 1], minlength=256)
        zeros = np.bincount(first[:half][labels[:half] == 0], minlength=256)
        guess = (ones > zeros).astype(np.uint8)
        assert float(np.mean(guess[first[half:]] == labels[half:])) <= 0.52

        for bit in (0, 1):
            counts = np.bincount(first[labels == bit], minlength=256)
            expected = counts.sum() / 256
            chi2 = float(((counts - expected) ** 2 / expected).sum())
            assert chi2 < 340, f"bit={bit} chi2={chi2:.1f}"
