"""HMAC-SHA-256 circuit for short messages, keyed by precomputed midstates."""

from __future__ import annotations

import struct
from functools import lru_cache
from typing import List, Sequence

from qres.circuits.builder import ZERO, CircuitBuilder, Wire, bytes_of, io_bits_of
from qres.circuits.circuit import Circuit
from qres.config.constants import TOKEN_LEN
from qres.crypto.sha256 import K

Word = List[Wire]


def _rotr(w: Word, n: int) -> Word:
    return [w[(i + n) % 32] for i in range(32)]


def _shr(w: Word, n: int) -> Word:
    return [w[i + n] if i + n < 32 else ZERO for i in range(32)]


def _xor3(b: CircuitBuilder, x: Word, y: Word, z: Word) -> Word:
    return b.xor_vec(b.xor_vec(x, y), z)


def words_of(byte_list: Sequence[Sequence[Wire]]) -> List[Word]:
    """Big-endian 32-bit words from LSB-first bytes."""
    return [
        [byte_list[4 * j + 3 - i // 8][i % 8] for i in range(32)]
        for j in range(len(byte_list) // 4)
    ]


def bytes_of_words(words: Sequence[Word]) -> List[List[Wire]]:
    out = []
    for w in words:
        for k in range(4):
            out.append(list(w[8 * (3 - k) : 8 * (3 - k) + 8]))
    return out


def compress_c(b: CircuitBuilder, state: Sequence[Word], block: Sequence[Word]) -> List[Word]:
    w = list(block)
    for i in range(16, 64):
        s0 = _xor3(b, _rotr(w[i - 15], 7), _rotr(w[i - 15], 18), _shr(w[i - 15], 3))
        s1 = _xor3(b, _rotr(w[i - 2], 17), _rotr(w[i - 2], 19), _shr(w[i - 2], 10))
        w.append(b.add32(b.add32(w[i - 16], s0), b.add32(w[i - 7], s1)))

    a, bb, c, d, e, f, g, h = state
    for i in range(64):
        S1 = _xor3(b, _rotr(e, 6), _rotr(e, 11), _rotr(e, 25))
        ch = b.xor_vec(g, b.and_vec(e, b.xor_vec(f, g)))
        t1 = b.add32(b.add32(h, S1), b.add32(ch, b.add32(b.constant(K[i], 32), w[i])))
        S0 = _xor3(b, _rotr(a, 2), _rotr(a, 13), _rotr(a, 22))
        maj = b.xor_vec(a, b.and_vec(b.xor_vec(a, bb), b.xor_vec(a, c)))
        t2 = b.add32(S0, maj)
        h, g, f, e, d, c, bb, a = g, f, e, b.add32(d, t1), c, bb, a, b.add32(t1, t2)

    return [b.add32(x, y) for x, y in zip(state, (a, bb, c, d, e, f, g, h))]


def _padded_block(b: CircuitBuilder, message: Sequence[Sequence[Wire]], prefix_len: int) -> List[Word]:
    bit_len = (prefix_len + len(message)) * 8
    tail = b"\x80" + b"\x00" * (55 - len(message)) + struct.pack(">Q", bit_len)
    block = list(message) + [b.constant(x, 8) for x in tail]
    return words_of(block)


def hmac_c(
    b: CircuitBuilder,
    inner: Sequence[Word],
    outer: Sequence[Word],
    message: Sequence[Sequence[Wire]],
) -> List[List[Wire]]:
    digest = compress_c(b, inner, _padded_block(b, message, 64))
    tag = compress_c(b, outer, _padded_block(b, bytes_of_words(digest), 64))
    return bytes_of_words(tag)


@lru_cache(maxsize=None)
def build_hmac_sha256() -> Circuit:
    """Inputs: inner midstate (256) ∥ outer midstate (256), then the 8-byte token; output: 32-byte tag."""
    b = CircuitBuilder((512, TOKEN_LEN * 8), name="hmac_sha256")
    garbler = bytes_of(b.inputs(0))
    inner, outer = words_of(garbler[:32]), words_of(garbler[32:])
    message = bytes_of(b.inputs(1))
    return b.finish(io_bits_of(hmac_c(b, inner, outer, message)))
