"""Symmetric primitives: deterministic token encryption, hashing, MAC, signatures, AEAD."""

from __future__ import annotations

import hashlib
import hmac as _hmac
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives import hmac as crypto_hmac
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from qres.config.constants import BLOCK_LEN, NONCE_LEN, SYM_KEY_LEN, TOKEN_LEN
from qres.crypto.rng import Rng
from qres.errors import BadPadding, BadTokenLength

_PAD = bytes([0x08]) * (BLOCK_LEN - TOKEN_LEN)


def keygen_sym(rng: Rng) -> bytes:
    return rng.bytes(SYM_KEY_LEN)


def new_nonce(rng: Rng) -> bytes:
    return rng.bytes(NONCE_LEN)


def _check_key(k: bytes) -> None:
    if len(k) != SYM_KEY_LEN:
        raise ValueError(f"symmetric key must be {SYM_KEY_LEN} bytes, got {len(k)}")


def aes_block_encrypt(k: bytes, block: bytes) -> bytes:
    _check_key(k)
    enc = Cipher(algorithms.AES(k), modes.ECB()).encryptor()
    return enc.update(block) + enc.finalize()


def aes_block_decrypt(k: bytes, block: bytes) -> bytes:
    _check_key(k)
    dec = Cipher(algorithms.AES(k), modes.ECB()).decryptor()
    return dec.update(block) + dec.finalize()


def pad16(t: bytes) -> bytes:
    if len(t) != TOKEN_LEN:
        raise BadTokenLength(f"token must be {TOKEN_LEN} bytes, got {len(t)}")
    return t + _PAD


def unpad16(block: bytes) -> bytes:
    if len(block) != BLOCK_LEN or block[TOKEN_LEN:] != _PAD:
        raise BadPadding("token block padding check failed")
    return block[:TOKEN_LEN]


def enc_token(k: bytes, t: bytes) -> bytes:
    """Deterministic single-block encryption of an 8-byte token."""
    return aes_block_encrypt(k, pad16(t))


def dec_token(k: bytes, c: bytes) -> bytes:
    if len(c) != BLOCK_LEN:
        raise BadPadding(f"ciphertext must be {BLOCK_LEN} bytes, got {len(c)}")
    return unpad16(aes_block_decrypt(k, c))


def hash(m: bytes) -> bytes:  # noqa: A001 - protocol name
    return hashlib.sha256(m).digest()


def mac_tag(mk: bytes, m: bytes) -> bytes:
    h = crypto_hmac.HMAC(mk, hashes.SHA256())
    h.update(m)
    return h.finalize()


def mac_verify(mk: bytes, m: bytes, tag: bytes) -> bool:
    return _hmac.compare_digest(mac_tag(mk, m), tag)


# ---------- Signatures (Ed25519) ----------

@dataclass(frozen=True)
class SigKeyPair:
    sk: Ed25519PrivateKey
    pk: bytes

    def private_bytes(self) -> bytes:
        return self.sk.private_bytes(
            serialization.Encoding.Raw,
            serialization.PrivateFormat.Raw,
            serialization.NoEncryption(),
        )

    @classmethod
    def from_private_bytes(cls, raw: bytes) -> "SigKeyPair":
        sk = Ed25519PrivateKey.from_private_bytes(raw)
        pk = sk.public_key().public_bytes(serialization.Encoding.Raw, serialization.PublicFormat.Raw)
        return cls(sk=sk, pk=pk)


def sign_keygen(rng: Rng) -> SigKeyPair:
    return SigKeyPair.from_private_bytes(rng.bytes(32))


def sign(keys: SigKeyPair, m: bytes) -> bytes:
    return keys.sk.sign(m)


def verify(pk: bytes, m: bytes, sig: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(pk).verify(sig, m)
        return True
    except (InvalidSignature, ValueError):
        return False


# ---------- AEAD ----------

def aead_seal(key: bytes, nonce: bytes, plaintext: bytes, aad: bytes = b"") -> bytes:
    return AESGCM(key).encrypt(nonce, plaintext, aad or None)


def aead_open(key: bytes, nonce: bytes, ciphertext: bytes, aad: bytes = b"") -> bytes:
    """Returns the plaintext or raises ``InvalidTag``."""
    return AESGCM(key).decrypt(nonce, ciphertext, aad or None)


__all__ = [
    "InvalidTag",
    "SigKeyPair",
    "aead_open",
    "aead_seal",
    "aes_block_decrypt",
    "aes_block_encrypt",
    "dec_token",
    "enc_token",
    "hash",
    "keygen_sym",
    "mac_tag",
    "mac_verify",
    "new_nonce",
    "pad16",
    "sign",
    "sign_keygen",
    "unpad16",
    "verify",
]
