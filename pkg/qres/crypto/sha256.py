"""SHA-256 compression function and HMAC midstates.

hashlib does not expose intermediate chaining values, so the compression
function is implemented here. The in-circuit HMAC takes the two midstates
(after absorbing ``k ^ ipad`` and ``k ^ opad``) as provider input.
"""

from __future__ import annotations

import struct
from typing import Sequence, Tuple

IV = (
    0x6A09E667, 0xBB67AE85, 0x3C6EF372, 0xA54FF53A,
    0x510E527F, 0x9B05688C, 0x1F83D9AB, 0x5BE0CD19,
)

K = (
    0x428A2F98, 0x71374491, 0xB5C0FBCF, 0xE9B5DBA5, 0x3956C25B, 0x59F111F1, 0x923F82A4, 0xAB1C5ED5,
    0xD807AA98, 0x12835B01, 0x243185BE, 0x550C7DC3, 0x72BE5D74, 0x80DEB1FE, 0x9BDC06A7, 0xC19BF174,
    0xE49B69C1, 0xEFBE4786, 0x0FC19DC6, 0x240CA1CC, 0x2DE92C6F, 0x4A7484AA, 0x5CB0A9DC, 0x76F988DA,
    0x983E5152, 0xA831C66D, 0xB00327C8, 0xBF597FC7, 0xC6E00BF3, 0xD5A79147, 0x06CA6351, 0x14292967,
    0x27B70A85, 0x2E1B2138, 0x4D2C6DFC, 0x53380D13, 0x650A7354, 0x766A0ABB, 0x81C2C92E, 0x92722C85,
    0xA2BFE8A1, 0xA81A664B, 0xC24B8B70, 0xC76C51A3, 0xD192E819, 0xD6990624, 0xF40E3585, 0x106AA070,
    0x19A4C116, 0x1E376C08, 0x2748774C, 0x34B0BCB5, 0x391C0CB3, 0x4ED8AA4A, 0x5B9CCA4F, 0x682E6FF3,
    0x748F82EE, 0x78A5636F, 0x84C87814, 0x8CC70208, 0x90BEFFFA, 0xA4506CEB, 0xBEF9A3F7, 0xC67178F2,
)

_M = 0xFFFFFFFF


def _rotr(x: int, n: int) -> int:
    return ((x >> n) | (x << (32 - n))) & _M


def sha256_compress(state: Sequence[int], block: bytes) -> Tuple[int, ...]:
    if len(state) != 8 or len(block) != 64:
        raise ValueError("compression needs an 8-word state and a 64-byte block")
    w = list(struct.unpack(">16I", block))
    for i in range(16, 64):
        s0 = _rotr(w[i - 15], 7) ^ _rotr(w[i - 15], 18) ^ (w[i - 15] >> 3)
        s1 = _rotr(w[i - 2], 17) ^ _rotr(w[i - 2], 19) ^ (w[i - 2] >> 10)
        w.append((w[i - 16] + s0 + w[i - 7] + s1) & _M)

    a, b, c, d, e, f, g, h = state
    for i in range(64):
        S1 = _rotr(e, 6) ^ _rotr(e, 11) ^ _rotr(e, 25)
        ch = (e & f) ^ (~e & g)
        t1 = (h + S1 + ch + K[i] + w[i]) & _M
        S0 = _rotr(a, 2) ^ _rotr(a, 13) ^ _rotr(a, 22)
        maj = (a & b) ^ (a & c) ^ (b & c)
        t2 = (S0 + maj) & _M
        h, g, f, e, d, c, b, a = g, f, e, (d + t1) & _M, c, b, a, (t1 + t2) & _M

    return tuple((x + y) & _M for x, y in zip(state, (a, b, c, d, e, f, g, h)))


def state_bytes(state: Sequence[int]) -> bytes:
    return struct.pack(">8I", *state)


def state_from_bytes(raw: bytes) -> Tuple[int, ...]:
    return struct.unpack(">8I", raw)


def hmac_midstates(k_val: bytes) -> Tuple[bytes, bytes]:
    """(inner, outer) chaining values after the key blocks of HMAC-SHA-256."""
    if len(k_val) > 64:
        raise ValueError("validation key longer than one block is not supported")
    key = k_val.ljust(64, b"\x00")
    inner = sha256_compress(IV, bytes(b ^ 0x36 for b in key))
    outer = sha256_compress(IV, bytes(b ^ 0x5C for b in key))
    return state_bytes(inner), state_bytes(outer)


def hmac_from_midstates(inner: bytes, outer: bytes, message: bytes) -> bytes:
    """HMAC-SHA-256 of a short (≤ 55-byte) message, continuing from midstates."""
    if len(message) > 55:
        raise ValueError("message must fit one padded block")
    block = _final_block(message, 64)
    digest = state_bytes(sha256_compress(state_from_bytes(inner), block))
    block = _final_block(digest, 64)
    return state_bytes(sha256_compress(state_from_bytes(outer), block))


def _final_block(message: bytes, prefix_len: int) -> bytes:
    bit_len = (prefix_len + len(message)) * 8
    padded = message + b"\x80" + b"\x00" * (55 - len(message)) + struct.pack(">Q", bit_len)
    return padded
