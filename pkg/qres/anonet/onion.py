"""Three-hop onion packets.

Layer encoding::

    E (32) | length (4, big-endian) | AES-GCM(key, 0^12, next_addr (16) | inner)

with ``key = SHA-256(x·E | E | X)[:16]`` for hop key pair (x, X) and a fresh
ephemeral E per layer. Replies travel back sealed under the same layer keys
with nonce 0x01^12, one seal per hop.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from hashlib import sha256
from typing import List, NamedTuple, Sequence, Tuple

from qres.config.constants import ADDRESS_LEN, GROUP_ELEMENT_LEN
from qres.crypto import group
from qres.crypto.prims import InvalidTag, aead_open, aead_seal
from qres.crypto.rng import Rng
from qres.errors import InvalidGroupElement, PeelFailure

HOPS = 3
_FORWARD_NONCE = bytes(12)
_REPLY_NONCE = b"\x01" * 12
_LEN = struct.Struct(">I")


def address(name) -> bytes:
    """16-byte address field for a node name (zero padded) or raw address bytes."""
    raw = name.encode("utf-8") if isinstance(name, str) else bytes(name)
    if len(raw) > ADDRESS_LEN:
        raise ValueError(f"address {name!r} longer than {ADDRESS_LEN} bytes")
    return raw.ljust(ADDRESS_LEN, b"\x00")


@dataclass(frozen=True)
class HopKeys:
    secret: bytes
    public: bytes

    @classmethod
    def generate(cls, rng: Rng) -> "HopKeys":
        x = group.scalar_random(rng)
        return cls(secret=x, public=group.base_mul(x))


class Peeled(NamedTuple):
    next_addr: bytes
    inner: bytes
    key: bytes


def _layer_key(shared: bytes, eph: bytes, hop_public: bytes) -> bytes:
    return sha256(shared + eph + hop_public).digest()[:16]


def onion_build(
    payload: bytes,
    hop_keys: Sequence[bytes],
    hop_addrs: Sequence[bytes],
    rng: Rng,
) -> Tuple[bytes, List[bytes]]:
    """Wrap ``payload`` for hops 1..3.

    ``hop_addrs[i]`` is what hop ``i`` learns as its next destination: the
    following hop's address, and for the last hop the final recipient.
    Returns the packet and the per-hop layer keys, outermost first.
    """
    if len(hop_keys) != HOPS or len(hop_addrs) != HOPS:
        raise ValueError(f"onion routes have exactly {HOPS} hops")
    keys: List[bytes] = []
    blob = payload
    for public, nxt in reversed(list(zip(hop_keys, hop_addrs))):
        e = group.scalar_random(rng)
        E = group.base_mul(e)
        key = _layer_key(group.mul(e, public), E, public)
        sealed = aead_seal(key, _FORWARD_NONCE, address(nxt) + blob)
        blob = E + _LEN.pack(len(sealed)) + sealed
        keys.append(key)
    keys.reverse()
    return blob, keys


def onion_peel(hop: HopKeys, packet: bytes) -> Peeled:
    if len(packet) < GROUP_ELEMENT_LEN + _LEN.size:
        raise PeelFailure("onion layer is truncated")
    eph = packet[:GROUP_ELEMENT_LEN]
    (length,) = _LEN.unpack_from(packet, GROUP_ELEMENT_LEN)
    sealed = packet[GROUP_ELEMENT_LEN + _LEN.size :]
    if len(sealed) != length:
        raise PeelFailure(f"onion layer announces {length} bytes, carries {len(sealed)}")
    try:
        key = _layer_key(group.mul(hop.secret, eph), eph, hop.public)
        plain = aead_open(key, _FORWARD_NONCE, sealed)
    except (InvalidTag, InvalidGroupElement) as e:
        raise PeelFailure("onion layer does not open under this hop's key") from e
    return Peeled(plain[:ADDRESS_LEN], plain[ADDRESS_LEN:], key)


def wrap_reply(key: bytes, data: bytes) -> bytes:
    return aead_seal(key, _REPLY_NONCE, data)


def unwrap_reply(keys: Sequence[bytes], data: bytes) -> bytes:
    """Remove reply layers in route order (first hop's layer is outermost)."""
    for k in keys:
        try:
            data = aead_open(k, _REPLY_NONCE, data)
        except InvalidTag as e:
            raise PeelFailure("reply layer failed authentication") from e
    return data
