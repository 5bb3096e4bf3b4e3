"""Cryptographic primitives used across the marketplace."""

from .prims import (
    SigKeyPair,
    aead_open,
    aead_seal,
    dec_token,
    enc_token,
    hash,
    keygen_sym,
    mac_tag,
    mac_verify,
    new_nonce,
    pad16,
    sign,
    sign_keygen,
    unpad16,
    verify,
)
from .rng import DeterministicRng, Rng, SystemRng, default_rng
from .sha256 import hmac_midstates, sha256_compress

__all__ = [
    "DeterministicRng",
    "Rng",
    "SigKeyPair",
    "SystemRng",
    "aead_open",
    "aead_seal",
    "dec_token",
    "default_rng",
    "enc_token",
    "hash",
    "hmac_midstates",
    "keygen_sym",
    "mac_tag",
    "mac_verify",
    "new_nonce",
    "pad16",
    "sha256_compress",
    "sign",
    "sign_keygen",
    "unpad16",
    "verify",
]
