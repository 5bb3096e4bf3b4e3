import hashlib
import os
import struct
import sys

import pytest

os.environ.setdefault("LOG_DIR", os.path.join(os.path.dirname(os.path.abspath(__file__)), "_logs"))

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from qres.crypto import group
from qres.crypto.prims import (
    InvalidTag,
    SigKeyPair,
    aead_open,
    aead_seal,
    aes_block_encrypt,
    dec_token,
    enc_token,
    keygen_sym,
    mac_tag,
    mac_verify,
    pad16,
    sign,
    sign_keygen,
    unpad16,
    verify,
)
from qres.crypto.rng import DeterministicRng
from qres.crypto.sha256 import IV, hmac_from_midstates, hmac_midstates, sha256_compress, state_bytes
from qres.errors import BadPadding, BadTokenLength, InvalidGroupElement

FIPS_KEY = bytes(range(16))
FIPS_PLAIN = bytes.fromhex("00112233445566778899aabbccddeeff")
FIPS_CIPHER = bytes.fromhex("69c4e0d86a7b0430d8cdb78070b4c55a")


class TestTokenCipher:
    def test_aes_known_answer(self):
        assert aes_block_encrypt(FIPS_KEY, FIPS_PLAIN) == FIPS_CIPHER

    def test_enc_token_known_answers(self):
        assert enc_token(FIPS_KEY, bytes(8)).hex() == "603d8ccd7521e2961567c024df336785"
        # token of "level3||3"
        c = enc_token(FIPS_KEY, bytes.fromhex("6b0e3c36430c5f13"))
        assert c.hex() == "5e34f3c31c60d3793ba4cdc91b395421"
        assert dec_token(FIPS_KEY, c) == bytes.fromhex("6b0e3c36430c5f13")

    def test_enc_token_is_deterministic_and_invertible(self, rng):
        key = keygen_sym(rng)
        token = b"\x01\x02\x03\x04\x05\x06\x07\x08"
        c = enc_token(key, token)
        assert len(c) == 16
        assert c == enc_token(key, token)
        assert dec_token(key, c) == token

    def test_different_keys_give_different_ciphertexts(self, rng):
        token = bytes(8)
        assert enc_token(keygen_sym(rng), token) != enc_token(keygen_sym(rng), token)

    def test_pad16_requires_eight_bytes(self):
        with pytest.raises(BadTokenLength):
            pad16(b"short")
        assert pad16(bytes(8))[8:] == bytes([8]) * 8

    def test_unpad_rejects_foreign_block(self):
        with pytest.raises(BadPadding):
            unpad16(bytes(16))

    def test_dec_token_rejects_unpadded_plaintext(self, rng):
        key = keygen_sym(rng)
        with pytest.raises(BadPadding):
            dec_token(key, aes_block_encrypt(key, bytes(16)))

    def test_key_length_is_checked(self):
        with pytest.raises(ValueError):
            enc_token(b"k" * 15, bytes(8))


class TestHashing:
    def test_compress_matches_hashlib(self):
        msg = b"abc"
        block = msg + b"\x80" + bytes(55 - len(msg)) + struct.pack(">Q", 8 * len(msg))
        assert state_bytes(sha256_compress(IV, block)) == hashlib.sha256(msg).digest()

    def test_hmac_rfc4231_case_1(self):
        key = b"\x0b" * 20
        expected = bytes.fromhex("b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7")
        assert mac_tag(key, b"Hi There") == expected
        inner, outer = hmac_midstates(key)
        assert hmac_from_midstates(inner, outer, b"Hi There") == expected

    def test_midstate_hmac_matches_library_for_tokens(self, rng):
        key = rng.bytes(16)
        inner, outer = hmac_midstates(key)
        for _ in range(5):
            token = rng.bytes(8)
            assert hmac_from_midstates(inner, outer, token) == mac_tag(key, token)

    def test_mac_verify(self, rng):
        key = rng.bytes(16)
        tag = mac_tag(key, b"token-01")
        assert mac_verify(key, b"token-01", tag)
        assert not mac_verify(key, b"token-02", tag)


class TestSignatures:
    def test_sign_and_verify(self, rng):
        keys = sign_keygen(rng)
        sig = sign(keys, b"message")
        assert len(sig) == 64
        assert verify(keys.pk, b"message", sig)
        assert not verify(keys.pk, b"other", sig)

    def test_private_bytes_restore_the_same_key(self, rng):
        keys = sign_keygen(rng)
        again = SigKeyPair.from_private_bytes(keys.private_bytes())
        assert again.pk == keys.pk

    def test_verify_with_garbage_key_is_false(self):
        assert not verify(b"\x00" * 5, b"m", b"\x00" * 64)


class TestAead:
    def test_roundtrip_and_tamper(self, rng):
        key, nonce = rng.bytes(16), rng.bytes(12)
        sealed = aead_seal(key, nonce, b"payload", b"aad")
        assert aead_open(key, nonce, sealed, b"aad") == b"payload"
        tampered = sealed[:-1] + bytes([sealed[-1] ^ 1])
        with pytest.raises(InvalidTag):
            aead_open(key, nonce, tampered, b"aad")


class TestGroup:
    def test_diffie_hellman_agreement(self, rng):
        a, b = group.scalar_random(rng), group.scalar_random(rng)
        A, B = group.base_mul(a), group.base_mul(b)
        assert group.mul(a, B) == group.mul(b, A)

    def test_add_sub_inverse(self, rng):
        P = group.base_mul(group.scalar_random(rng))
        Q = group.base_mul(group.scalar_random(rng))
        assert group.sub(group.add(P, Q), Q) == P

    def test_rejects_wrong_length(self):
        with pytest.raises(InvalidGroupElement):
            group.decode_element(b"\x01" * 31)

    def test_rejects_small_order_points(self):
        identity = b"\x01" + bytes(31)
        with pytest.raises(InvalidGroupElement):
            group.decode_element(identity)
        with pytest.raises(InvalidGroupElement):
            group.decode_element(bytes(32))


class TestRng:
    def test_deterministic_streams_repeat(self):
        assert DeterministicRng("seed").bytes(64) == DeterministicRng("seed").bytes(64)
        assert DeterministicRng("seed").bytes(32) != DeterministicRng("other").bytes(32)

    def test_fork_is_reproducible(self):
        a = DeterministicRng(7).fork("x").bytes(16)
        b = DeterministicRng(7).fork("x").bytes(16)
        c = DeterministicRng(7).fork("y").bytes(16)
        assert a == b
        assert a != c

    def test_sample_and_bounds(self, rng):
        picked = rng.sample(range(10), 9)
        assert len(set(picked)) == 9
        assert all(0 <= i < 10 for i in picked)
        with pytest.raises(ValueError):
            rng.sample(range(3), 4)
        with pytest.raises(ValueError):
            rng.randbelow(0)

    def test_bits(self, rng):
        bits = rng.bits(13)
        assert len(bits) == 13
        assert set(bits) <= {0, 1}
