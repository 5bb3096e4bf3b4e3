"""Prime-order group (ed25519 subgroup, order L) via libsodium bindings.

Elements are canonical 32-byte encodings; scalars are 32-byte little-endian
values reduced modulo L. Used for oblivious transfer and onion key agreement.
"""

from __future__ import annotations

from nacl import bindings
from nacl.exceptions import RuntimeError as NaclRuntimeError

from qres.config.constants import GROUP_ELEMENT_LEN
from qres.crypto.rng import Rng
from qres.errors import InvalidGroupElement

SCALAR_LEN = 32


def scalar_random(rng: Rng) -> bytes:
    while True:
        s = bindings.crypto_core_ed25519_scalar_reduce(rng.bytes(64))
        if any(s):
            return s


def decode_element(raw: bytes) -> bytes:
    """Validate an encoded element; rejects non-canonical, small-order and off-subgroup points."""
    if not isinstance(raw, (bytes, bytearray)) or len(raw) != GROUP_ELEMENT_LEN:
        raise InvalidGroupElement(f"group element must be {GROUP_ELEMENT_LEN} bytes")
    raw = bytes(raw)
    if not bindings.crypto_core_ed25519_is_valid_point(raw):
        raise InvalidGroupElement("not a valid prime-order group element")
    return raw


def base_mul(s: bytes) -> bytes:
    try:
        return bindings.crypto_scalarmult_ed25519_base_noclamp(s)
    except NaclRuntimeError as e:
        raise InvalidGroupElement(f"degenerate scalar: {e}") from e


def mul(s: bytes, p: bytes) -> bytes:
    try:
        return bindings.crypto_scalarmult_ed25519_noclamp(s, decode_element(p))
    except NaclRuntimeError as e:
        raise InvalidGroupElement(f"scalar multiplication failed: {e}") from e


def add(p: bytes, q: bytes) -> bytes:
    return bindings.crypto_core_ed25519_add(decode_element(p), decode_element(q))


def sub(p: bytes, q: bytes) -> bytes:
    return bindings.crypto_core_ed25519_sub(decode_element(p), decode_element(q))
