"""AES-128 encryption circuit.

The S-box inverts in GF((2^4)^2): the input byte is mapped into the tower
field by a fixed linear isomorphism, inverted with GF(2^4) arithmetic, then
mapped back together with the AES affine transform. Each S-box costs 78 AND
gates; everything else in AES is XOR/INV.
"""

from __future__ import annotations

from functools import lru_cache
from typing import List, Sequence, Tuple

from qres.circuits.builder import CircuitBuilder, Wire, bytes_of, io_bits_of
from qres.circuits.circuit import Circuit

# ---------- field arithmetic on ints ----------

AES_POLY = 0x11B
GF16_POLY = 0x13


def gf256_mul(a: int, b: int) -> int:
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        if a & 0x100:
            a ^= AES_POLY
        b >>= 1
    return r


def gf16_mul(a: int, b: int) -> int:
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        if a & 0x10:
            a ^= GF16_POLY
        b >>= 1
    return r


def _gf16_irreducible_lambda() -> int:
    squares_plus = {gf16_mul(y, y) ^ y for y in range(16)}
    return next(lam for lam in range(1, 16) if lam not in squares_plus)


LAMBDA = _gf16_irreducible_lambda()


def tower_mul(x: int, y: int) -> int:
    h1, l1 = x >> 4, x & 0xF
    h2, l2 = y >> 4, y & 0xF
    hh = gf16_mul(h1, h2)
    high = hh ^ gf16_mul(h1, l2) ^ gf16_mul(l1, h2)
    low = gf16_mul(LAMBDA, hh) ^ gf16_mul(l1, l2)
    return (high << 4) | low


def _tower_pow(x: int, e: int) -> int:
    r = 0x01
    for _ in range(e):
        r = tower_mul(r, x)
    return r


def _find_basis() -> Tuple[int, ...]:
    """Images of 1, x, ..., x^7 under the AES-field to tower-field isomorphism."""
    for beta in range(2, 256):
        value = 0
        for exp in (8, 4, 3, 1, 0):
            value ^= _tower_pow(beta, exp)
        if value == 0:
            return tuple(_tower_pow(beta, i) for i in range(8))
    raise RuntimeError("no root of the AES polynomial in the tower field")


_BASIS = _find_basis()


def to_tower(a: int) -> int:
    out = 0
    for i in range(8):
        if (a >> i) & 1:
            out ^= _BASIS[i]
    return out


_FROM_TOWER = [0] * 256
for _a in range(256):
    _FROM_TOWER[to_tower(_a)] = _a


def from_tower(t: int) -> int:
    return _FROM_TOWER[t]


def affine_linear(x: int) -> int:
    out = 0
    for i in range(8):
        bit = 0
        for k in (0, 4, 5, 6, 7):
            bit ^= (x >> ((i + k) % 8)) & 1
        out |= bit << i
    return out


def gf256_inv(a: int) -> int:
    if a == 0:
        return 0
    r = 1
    for _ in range(254):
        r = gf256_mul(r, a)
    return r


SBOX = tuple(affine_linear(gf256_inv(a)) ^ 0x63 for a in range(256))

RCON = (0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80, 0x1B, 0x36)

# ---------- circuit pieces ----------

Byte = List[Wire]


def _gf16_mul_c(b: CircuitBuilder, x: Sequence[Wire], y: Sequence[Wire]) -> List[Wire]:
    c = [[] for _ in range(7)]
    for i in range(4):
        for j in range(4):
            c[i + j].append(b.and_(x[i], y[j]))
    c = [b.xor_many(terms) for terms in c]
    # x^4 = x + 1
    return [
        b.xor(c[0], c[4]),
        b.xor_many([c[1], c[4], c[5]]),
        b.xor_many([c[2], c[5], c[6]]),
        b.xor(c[3], c[6]),
    ]


def _gf16_inv_c(b: CircuitBuilder, d: Sequence[Wire]) -> List[Wire]:
    d2 = b.linear(d, lambda v: gf16_mul(v, v))
    d3 = _gf16_mul_c(b, d2, d)
    d12 = b.linear(d3, lambda v: gf16_mul(gf16_mul(v, v), gf16_mul(v, v)))
    return _gf16_mul_c(b, d12, d2)


def sbox_c(b: CircuitBuilder, x: Byte) -> Byte:
    t = b.linear(x, to_tower)
    low, high = t[:4], t[4:]
    d = b.xor_vec(
        b.xor_vec(b.linear(high, lambda v: gf16_mul(LAMBDA, gf16_mul(v, v))), _gf16_mul_c(b, high, low)),
        b.linear(low, lambda v: gf16_mul(v, v)),
    )
    dinv = _gf16_inv_c(b, d)
    new_high = _gf16_mul_c(b, high, dinv)
    new_low = _gf16_mul_c(b, b.xor_vec(high, low), dinv)
    out = b.linear(new_low + new_high, lambda v: affine_linear(from_tower(v)))
    return b.xor_vec(out, b.constant(0x63, 8))


def _xtime_c(b: CircuitBuilder, x: Byte) -> Byte:
    return b.linear(x, lambda v: gf256_mul(v, 2))


def _mix_column(b: CircuitBuilder, col: Sequence[Byte]) -> List[Byte]:
    t = b.xor_vec(b.xor_vec(col[0], col[1]), b.xor_vec(col[2], col[3]))
    out = []
    for i in range(4):
        nxt = col[(i + 1) % 4]
        out.append(b.xor_vec(b.xor_vec(col[i], t), _xtime_c(b, b.xor_vec(col[i], nxt))))
    return out


def expand_key_c(b: CircuitBuilder, key: Sequence[Byte]) -> List[List[Byte]]:
    words = [list(key[4 * i : 4 * i + 4]) for i in range(4)]
    for i in range(4, 44):
        temp = words[i - 1]
        if i % 4 == 0:
            temp = [sbox_c(b, byte) for byte in temp[1:] + temp[:1]]
            temp[0] = b.xor_vec(temp[0], b.constant(RCON[i // 4 - 1], 8))
        words.append([b.xor_vec(x, y) for x, y in zip(words[i - 4], temp)])
    return [sum(words[4 * r : 4 * r + 4], []) for r in range(11)]


def aes128_c(b: CircuitBuilder, key: Sequence[Byte], block: Sequence[Byte]) -> List[Byte]:
    round_keys = expand_key_c(b, key)
    state = [b.xor_vec(s, k) for s, k in zip(block, round_keys[0])]
    for rnd in range(1, 11):
        state = [sbox_c(b, s) for s in state]
        state = [state[(r + 4 * (c + r)) % 16] for c in range(4) for r in range(4)]
        if rnd < 10:
            mixed: List[Byte] = []
            for c in range(4):
                mixed.extend(_mix_column(b, state[4 * c : 4 * c + 4]))
            state = mixed
        state = [b.xor_vec(s, k) for s, k in zip(state, round_keys[rnd])]
    return state


@lru_cache(maxsize=None)
def build_aes128() -> Circuit:
    """Inputs: key (128) then plaintext block (128); output: ciphertext (128)."""
    b = CircuitBuilder((128, 128), name="aes128")
    key = bytes_of(b.inputs(0))
    block = bytes_of(b.inputs(1))
    return b.finish(io_bits_of(aes128_c(b, key, block)))
