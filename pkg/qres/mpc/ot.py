"""1-out-of-2 oblivious transfer of wire labels (simplest-OT over the ed25519 group).

Sender publishes A = a·G. Receiver answers B = r·G for choice 0 or
A + r·G for choice 1. Sender derives k0 = H(A ∥ B ∥ a·B) and
k1 = H(A ∥ B ∥ a·(B − A)); the receiver can compute only k_b = H(A ∥ B ∥ r·A).
Each slot is AES_k(label) ∥ AES_k(0^8 ∥ index), so the wrong key fails the
integrity block.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from hashlib import sha256
from typing import List, Optional, Sequence, Tuple

from qres.config.constants import GROUP_ELEMENT_LEN, LABEL_LEN
from qres.crypto import group
from qres.crypto.prims import aes_block_decrypt, aes_block_encrypt
from qres.crypto.rng import Rng
from qres.errors import LengthMismatch, OtFailure

SLOT_LEN = 32
PAYLOAD_LEN = 2 * SLOT_LEN


@dataclass(frozen=True)
class OtSenderState:
    a: bytes
    A: bytes


@dataclass(frozen=True)
class OtReceiverState:
    r: bytes
    b: int
    A: bytes
    B: bytes


def _key(A: bytes, B: bytes, shared: bytes) -> bytes:
    return sha256(A + B + shared).digest()[:16]


def _check_block(index: int) -> bytes:
    return bytes(8) + struct.pack(">Q", index)


def _wrap(key: bytes, label: bytes, index: int) -> bytes:
    if len(label) != LABEL_LEN:
        raise LengthMismatch(f"OT message must be a {LABEL_LEN}-byte label")
    return aes_block_encrypt(key, label) + aes_block_encrypt(key, _check_block(index))


def ot_sender_setup(rng: Rng) -> Tuple[OtSenderState, bytes]:
    a = group.scalar_random(rng)
    A = group.base_mul(a)
    return OtSenderState(a=a, A=A), A


def ot_receiver_choose(b: int, smsg: bytes, rng: Rng) -> Tuple[OtReceiverState, bytes]:
    A = group.decode_element(smsg)
    r = group.scalar_random(rng)
    gr = group.base_mul(r)
    B = gr if not b else group.add(A, gr)
    return OtReceiverState(r=r, b=1 if b else 0, A=A, B=B), B


def ot_sender_respond(state: OtSenderState, rmsg: bytes, m0: bytes, m1: bytes, index: int = 0) -> bytes:
    B = group.decode_element(rmsg)
    k0 = _key(state.A, B, group.mul(state.a, B))
    k1 = _key(state.A, B, group.mul(state.a, group.sub(B, state.A)))
    return _wrap(k0, m0, index) + _wrap(k1, m1, index)


def ot_receive(state: OtReceiverState, payload: bytes, index: int = 0) -> bytes:
    if len(payload) != PAYLOAD_LEN:
        raise OtFailure(f"OT payload must be {PAYLOAD_LEN} bytes, got {len(payload)}")
    key = _key(state.A, state.B, group.mul(state.r, state.A))
    slot = payload[state.b * SLOT_LEN : (state.b + 1) * SLOT_LEN]
    if aes_block_decrypt(key, slot[16:]) != _check_block(index):
        raise OtFailure(f"OT instance {index}: chosen slot failed its integrity check")
    return aes_block_decrypt(key, slot[:16])


def try_open_slot(state: OtReceiverState, payload: bytes, slot: int, index: int = 0) -> Optional[bytes]:
    """Attempt a slot with the receiver's key; None when the integrity block does not check."""
    key = _key(state.A, state.B, group.mul(state.r, state.A))
    raw = payload[slot * SLOT_LEN : (slot + 1) * SLOT_LEN]
    if aes_block_decrypt(key, raw[16:]) != _check_block(index):
        return None
    return aes_block_decrypt(key, raw[:16])


def ot_batch(
    bits: Sequence[int],
    label_pairs: Sequence[Tuple[bytes, bytes]],
    rng: Rng,
    transcript: Optional[List[bytes]] = None,
) -> List[bytes]:
    """Run one OT per bit locally; ``transcript`` collects what the sender receives."""
    if len(bits) != len(label_pairs):
        raise LengthMismatch(f"{len(bits)} choice bits but {len(label_pairs)} label pairs")
    out = []
    for i, (b, (m0, m1)) in enumerate(zip(bits, label_pairs)):
        sstate, A = ot_sender_setup(rng)
        rstate, B = ot_receiver_choose(b, A, rng)
        if transcript is not None:
            transcript.append(B)
        out.append(ot_receive(rstate, ot_sender_respond(sstate, B, m0, m1, i), i))
    return out


def concat_elements(elements: Sequence[bytes]) -> bytes:
    return b"".join(elements)


def split_elements(data: bytes, count: int) -> List[bytes]:
    if len(data) != count * GROUP_ELEMENT_LEN:
        raise LengthMismatch(f"expected {count} group elements, got {len(data)} bytes")
    return [data[i * GROUP_ELEMENT_LEN : (i + 1) * GROUP_ELEMENT_LEN] for i in range(count)]
