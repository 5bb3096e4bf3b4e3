import os
import sys

import pytest

os.environ.setdefault("LOG_DIR", os.path.join(os.path.dirname(os.path.abspath(__file__)), "_logs"))

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from qres.circuits import BASIC, bits_to_bytes, build_qese_circuit, bytes_to_bits, eval_plain, parse_bristol
from qres.crypto.prims import enc_token, keygen_sym, pad16
from qres.errors import CorruptTable, EncodingConsumed, WidthMismatch
from qres.mpc.garbling import (
    EVALUATOR,
    TABLE_LEN,
    decode_output,
    deserialize_garbled,
    encode_input,
    evaluate_garbled,
    garble,
    serialize_garbled,
)

# garbler: 2 bits, evaluator: 2 bits; out0 = (g0 AND e0) XOR g1, out1 = NOT(g1 AND e1) XOR g0
MIXED = """\
5 9
2 2 2
1 2

2 1 0 2 4 AND
2 1 1 3 5 AND
1 1 5 6 INV
2 1 4 1 7 XOR
2 1 6 0 8 XOR
"""


def _mixed():
    c = parse_bristol(MIXED, "mixed")
    return c


def _garbled_eval(c, garbler_bits, evaluator_bits, rng, free_xor=False):
    gc, enc, dec = garble(c, rng, free_xor=free_xor)
    labels = encode_input(enc, garbler_bits) + enc._select(evaluator_bits)
    return decode_output(dec, evaluate_garbled(gc, labels))


@pytest.mark.parametrize("free_xor", [False, True])
def test_small_circuit_matches_plain_evaluation(rng, free_xor):
    c = parse_bristol("3 6\n2 2 1\n1 1\n\n2 1 0 1 3 AND\n2 1 3 2 4 XOR\n1 1 4 5 INV\n")
    for bits in ([a, b, d] for a in (0, 1) for b in (0, 1) for d in (0, 1)):
        assert _garbled_eval(c, bits[:2], bits[2:], rng, free_xor) == eval_plain(c, bits)


class TestGarbling:
    def test_point_and_permute_bits_differ(self, rng):
        _, enc, _ = garble(_mixed(), rng)
        for l0, l1 in enc.pairs:
            assert (l0[-1] & 1) != (l1[-1] & 1)

    def test_free_xor_shares_one_offset(self, rng):
        _, enc, _ = garble(_mixed(), rng, free_xor=True)
        offsets = {bytes(a ^ b for a, b in zip(l0, l1)) for l0, l1 in enc.pairs}
        assert len(offsets) == 1

    def test_free_xor_skips_xor_tables(self, rng):
        c = _mixed()
        plain, _, _ = garble(c, rng)
        free, _, _ = garble(c, rng, free_xor=True)
        assert len(plain.tables) == 4
        assert len(free.tables) == 2

    def test_fresh_labels_per_garbling(self, rng):
        c = _mixed()
        gc1, enc1, _ = garble(c, rng)
        gc2, enc2, _ = garble(c, rng)
        assert gc1.session_id != gc2.session_id
        assert enc1.pairs[0] != enc2.pairs[0]

    def test_evaluator_pairs_release_once(self, rng):
        _, enc, _ = garble(_mixed(), rng)
        assert not enc.consumed
        pairs = enc.release_evaluator_pairs()
        assert len(pairs) == enc.evaluator_width == 2
        assert enc.consumed
        with pytest.raises(EncodingConsumed):
            enc.release_evaluator_pairs()

    def test_evaluator_labels_are_not_encoded_directly(self, rng):
        _, enc, _ = garble(_mixed(), rng)
        with pytest.raises(ValueError):
            encode_input(enc, [0, 1], party=EVALUATOR)

    def test_width_checks(self, rng):
        c = _mixed()
        gc, enc, _ = garble(c, rng)
        with pytest.raises(WidthMismatch):
            encode_input(enc, [1])
        with pytest.raises(WidthMismatch):
            evaluate_garbled(gc, encode_input(enc, [1, 0]))

    def test_corrupt_table_is_detected(self, rng):
        c = _mixed()
        gc, enc, _ = garble(c, rng)
        labels = encode_input(enc, [1, 1]) + enc._select([1, 1])
        bad = bytearray(gc.tables[0])
        for i in range(0, TABLE_LEN, 24):
            bad[i + 20] ^= 0xFF
        gc.tables[0] = bytes(bad)
        with pytest.raises(CorruptTable):
            evaluate_garbled(gc, labels)

    def test_foreign_label_does_not_decode(self, rng):
        c = _mixed()
        gc, enc, dec = garble(c, rng)
        out = evaluate_garbled(gc, encode_input(enc, [0, 0]) + enc._select([0, 0]))
        with pytest.raises(CorruptTable):
            decode_output(dec, [bytes(16)] + out[1:])


class TestSerialization:
    def test_serialized_circuit_evaluates(self, rng):
        c = _mixed()
        gc, enc, dec = garble(c, rng)
        again = deserialize_garbled(serialize_garbled(gc), c)
        labels = encode_input(enc, [1, 0]) + enc._select([1, 1])
        assert decode_output(dec, evaluate_garbled(again, labels)) == eval_plain(c, [1, 0, 1, 1])

    def test_digest_binds_the_circuit(self, rng):
        gc, _, _ = garble(_mixed(), rng)
        other = parse_bristol("1 3\n2 1 1\n1 1\n\n2 1 0 1 2 AND\n")
        with pytest.raises(CorruptTable):
            deserialize_garbled(serialize_garbled(gc), other)

    def test_truncated(self, rng):
        c = _mixed()
        gc, _, _ = garble(c, rng)
        with pytest.raises(CorruptTable):
            deserialize_garbled(serialize_garbled(gc)[:-1], c)


class TestEncryptionCircuit:
    @pytest.mark.parametrize("free_xor", [False, True])
    def test_garbled_aes_yields_token_ciphertext(self, rng, free_xor):
        c = build_qese_circuit(BASIC)
        key = keygen_sym(rng)
        token = rng.bytes(8)
        out = _garbled_eval(c, bytes_to_bits(key), bytes_to_bits(pad16(token)), rng, free_xor)
        assert bits_to_bytes(out) == enc_token(key, token)

    def test_hundred_random_keys_and_tokens(self, rng):
        c = build_qese_circuit(BASIC)
        for i in range(100):
            key, token = keygen_sym(rng), rng.bytes(8)
            out = _garbled_eval(c, bytes_to_bits(key), bytes_to_bits(pad16(token)), rng, free_xor=i % 4 != 0)
            assert bits_to_bytes(out) == enc_token(key, token), f"pair {i}"
