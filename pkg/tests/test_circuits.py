import os
import sys

import pytest

os.environ.setdefault("LOG_DIR", os.path.join(os.path.dirname(os.path.abspath(__file__)), "_logs"))

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from qres.circuits import (
    BASIC,
    BOTTOM,
    VALIDATED,
    bits_to_bytes,
    build_aes128,
    build_hmac_sha256,
    build_qese_circuit,
    bytes_to_bits,
    census,
    eval_plain,
    eval_plain_batch,
    parse_bristol,
    serialize_bristol,
)
from qres.circuits.circuit import AND, INV, XOR, add_census
from qres.circuits.qese import (
    RESOURCE_DIR,
    RESOURCE_FILES,
    evaluator_width,
    export_resources,
    garbler_width,
    load_resource,
)
from qres.crypto.prims import aes_block_encrypt, enc_token, keygen_sym, mac_tag, pad16
from qres.crypto.sha256 import hmac_midstates
from qres.errors import FormatError, NonTopological, ResourceMissing, UnsupportedGateKind, WidthMismatch

SMALL = """\
2 5
2 2 1
1 1

2 1 0 1 3 AND
2 1 3 2 4 XOR
"""


def _run(circuit, *parts: bytes) -> bytes:
    bits = []
    for p in parts:
        bits.extend(bytes_to_bits(p))
    return bits_to_bytes(eval_plain(circuit, bits))


class TestBristol:
    def test_parse_small(self):
        c = parse_bristol(SMALL, "small")
        assert c.n_wires == 5
        assert c.input_widths == (2, 1)
        assert c.output_widths == (1,)
        assert list(c.output_wires) == [4]
        assert eval_plain(c, [1, 1, 0]) == [1]
        assert eval_plain(c, [1, 1, 1]) == [0]
        assert eval_plain(c, [0, 1, 1]) == [1]

    def test_serialize_keeps_gates(self):
        c = parse_bristol(SMALL)
        again = parse_bristol(serialize_bristol(c))
        assert again.gates == c.gates
        assert again.digest == c.digest

    def test_inv_and_not_alias(self):
        c = parse_bristol("1 2\n1 1\n1 1\n\n1 1 0 1 NOT\n")
        assert c.gates[0].kind == INV
        assert eval_plain(c, [0]) == [1]

    def test_gate_count_mismatch(self):
        with pytest.raises(FormatError):
            parse_bristol(SMALL.replace("2 5", "3 5", 1))

    def test_bad_header(self):
        with pytest.raises(FormatError):
            parse_bristol("2 5\n3 2 1\n1 1\n2 1 0 1 3 AND\n2 1 3 2 4 XOR\n")

    def test_unsupported_gate(self):
        with pytest.raises(UnsupportedGateKind):
            parse_bristol(SMALL.replace("AND", "OR"))

    def test_read_before_write(self):
        text = "2 5\n2 2 1\n1 1\n\n2 1 0 3 4 XOR\n2 1 0 1 3 AND\n"
        with pytest.raises(NonTopological):
            parse_bristol(text)

    def test_wire_reassigned(self):
        text = "2 5\n2 2 1\n1 1\n\n2 1 0 1 4 AND\n2 1 1 2 4 XOR\n"
        with pytest.raises(NonTopological):
            parse_bristol(text)

    def test_wire_out_of_range(self):
        with pytest.raises(FormatError):
            parse_bristol(SMALL.replace("3 2 4 XOR", "3 2 9 XOR"))

    def test_input_width_checked(self):
        c = parse_bristol(SMALL)
        with pytest.raises(WidthMismatch):
            eval_plain(c, [1, 0])

    def test_batch_matches_single(self):
        c = parse_bristol(SMALL)
        vectors = [[a, b, d] for a in (0, 1) for b in (0, 1) for d in (0, 1)]
        assert eval_plain_batch(c, vectors) == [eval_plain(c, v) for v in vectors]
        assert eval_plain_batch(c, []) == []


class TestBits:
    def test_msb_first(self):
        assert bytes_to_bits(b"\x80\x01") == [1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1]
        assert bits_to_bytes(bytes_to_bits(b"qres")) == b"qres"

    def test_partial_byte(self):
        with pytest.raises(WidthMismatch):
            bits_to_bytes([1, 0, 1])


class TestComponents:
    def test_aes_known_answer(self):
        key = bytes(range(16))
        plain = bytes.fromhex("00112233445566778899aabbccddeeff")
        assert _run(build_aes128(), key, plain) == bytes.fromhex("69c4e0d86a7b0430d8cdb78070b4c55a")

    def test_aes_matches_library(self, rng):
        c = build_aes128()
        for _ in range(3):
            key = keygen_sym(rng)
            token = rng.bytes(8)
            assert _run(c, key, pad16(token)) == enc_token(key, token)

    def test_hmac_matches_library(self, rng):
        k_val = rng.bytes(16)
        inner, outer = hmac_midstates(k_val)
        token = rng.bytes(8)
        assert _run(build_hmac_sha256(), inner + outer, token) == mac_tag(k_val, token)

    def test_census(self):
        c = build_aes128()
        counts = census(c)
        assert counts[AND] > 0 and counts[XOR] > 0
        assert sum(counts.values()) == len(c.gates)
        total = add_census(counts, census(build_hmac_sha256()))
        assert total[AND] == counts[AND] + census(build_hmac_sha256())[AND]


class TestQeseCircuits:
    def test_widths(self):
        basic = build_qese_circuit(BASIC)
        validated = build_qese_circuit(VALIDATED)
        assert basic.input_widths == (garbler_width(BASIC), evaluator_width(BASIC)) == (128, 128)
        assert validated.input_widths == (garbler_width(VALIDATED), evaluator_width(VALIDATED)) == (640, 384)
        assert basic.n_outputs == validated.n_outputs == 128

    def test_basic_equals_token_encryption(self, rng):
        key = keygen_sym(rng)
        token = rng.bytes(8)
        assert _run(build_qese_circuit(BASIC), key, pad16(token)) == enc_token(key, token)

    def test_validated_accepts_good_tag_and_rejects_forgery(self, rng):
        key, k_val = keygen_sym(rng), rng.bytes(16)
        inner, outer = hmac_midstates(k_val)
        token = rng.bytes(8)
        good = mac_tag(k_val, token)
        forged = bytes([good[0] ^ 1]) + good[1:]
        garbler = bytes_to_bits(key + inner + outer)
        c = build_qese_circuit(VALIDATED)
        out = eval_plain_batch(
            c,
            [
                garbler + bytes_to_bits(pad16(token) + good),
                garbler + bytes_to_bits(pad16(token) + forged),
            ],
        )
        assert bits_to_bytes(out[0]) == enc_token(key, token)
        assert bits_to_bytes(out[1]) == BOTTOM

    def test_validated_checks_the_pad(self, rng):
        key, k_val = keygen_sym(rng), rng.bytes(16)
        inner, outer = hmac_midstates(k_val)
        token = rng.bytes(8)
        tag = mac_tag(k_val, token)
        garbler = bytes_to_bits(key + inner + outer)
        blocks = [token + bytes(8), token + bytes([0x08] * 7 + [0x09]), token + rng.bytes(8), pad16(token)]
        out = eval_plain_batch(build_qese_circuit(VALIDATED), [garbler + bytes_to_bits(blk + tag) for blk in blocks])
        assert [bits_to_bytes(o) for o in out] == [BOTTOM, BOTTOM, BOTTOM, enc_token(key, token)]

    def test_thousand_forgeries(self, rng):
        key, k_val = keygen_sym(rng), rng.bytes(16)
        inner, outer = hmac_midstates(k_val)
        garbler = bytes_to_bits(key + inner + outer)
        tokens = [rng.bytes(8) for _ in range(1000)]
        forged = []
        for i, token in enumerate(tokens):
            if i < 512:
                # one flipped bit of the genuine tag
                tag = bytearray(mac_tag(k_val, token))
                tag[(i % 256) // 8] ^= 0x80 >> (i % 8)
                forged.append(bytes(tag))
            else:
                forged.append(rng.bytes(32))
        c = build_qese_circuit(VALIDATED)
        out = eval_plain_batch(c, [garbler + bytes_to_bits(pad16(t) + tag) for t, tag in zip(tokens, forged)])
        assert sum(bits_to_bytes(o) == BOTTOM for o in out) == 1000

        valid = tokens[:50]
        out = eval_plain_batch(c, [garbler + bytes_to_bits(pad16(t) + mac_tag(k_val, t)) for t in valid])
        assert [bits_to_bytes(o) for o in out] == [enc_token(key, t) for t in valid]

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            build_qese_circuit("Fast")


class TestResources:
    def test_export_and_load(self, tmp_path):
        written = export_resources(str(tmp_path))
        assert set(written) == {"aes128", "hmac_sha256"}
        loaded = load_resource("aes128", str(tmp_path))
        assert loaded.digest == build_aes128().digest
        composed = build_qese_circuit(BASIC, str(tmp_path))
        assert composed.digest == build_qese_circuit(BASIC).digest

    def test_shipped_files_parse_with_their_headers(self):
        for name, widths, outputs in (("aes128", (128, 128), (128,)), ("hmac_sha256", (512, 64), (256,))):
            path = os.path.join(RESOURCE_DIR, RESOURCE_FILES[name])
            with open(path, encoding="ascii") as f:
                n_gates, n_wires = (int(x) for x in f.readline().split())
            c = load_resource(name)
            assert (len(c.gates), c.n_wires) == (n_gates, n_wires)
            assert sum(census(c).values()) == n_gates
            assert c.input_widths == widths
            assert c.output_widths == outputs

    def test_shipped_aes_fips197(self, rng):
        aes = load_resource("aes128")
        key = bytes.fromhex("000102030405060708090a0b0c0d0e0f")
        block = bytes.fromhex("00112233445566778899aabbccddeeff")
        assert _run(aes, key, block).hex() == "69c4e0d86a7b0430d8cdb78070b4c55a"
        pairs = [(rng.bytes(16), rng.bytes(16)) for _ in range(20)]
        out = eval_plain_batch(aes, [bytes_to_bits(k + p) for k, p in pairs])
        assert [bits_to_bytes(o) for o in out] == [aes_block_encrypt(k, p) for k, p in pairs]

    def test_shipped_hmac(self, rng):
        k_val, token = rng.bytes(16), rng.bytes(8)
        inner, outer = hmac_midstates(k_val)
        assert _run(load_resource("hmac_sha256"), inner + outer, token) == mac_tag(k_val, token)

    def test_shipped_files_match_the_generators(self):
        assert load_resource("aes128").digest == build_aes128().digest
        assert load_resource("hmac_sha256").digest == build_hmac_sha256().digest

    def test_qese_from_shipped_files(self, rng):
        key, token = keygen_sym(rng), rng.bytes(8)
        assert _run(build_qese_circuit(BASIC, RESOURCE_DIR), key, pad16(token)) == enc_token(key, token)

    def test_missing_resource(self, tmp_path):
        with pytest.raises(ResourceMissing):
            load_resource("aes128", str(tmp_path))
