"""Yao garbling with point-and-permute.

Labels are 16 bytes; the permute (color) bit is the least significant bit of
the last byte. A garbled gate has four 24-byte rows. Row ``2*color(A) +
color(B)`` holds ``H(A ∥ B ∥ gate_index ∥ session)[:24] XOR (C ∥ 0^8)``;
the eight zero bytes detect decryption under wrong labels. INV gates are
free (label swap); XOR gates are free only with ``free_xor`` (global offset R).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from hashlib import sha256
from typing import List, Sequence, Tuple

from qres.circuits.circuit import AND, INV, XOR, Circuit
from qres.config.constants import GC_VERSION, LABEL_LEN
from qres.crypto.rng import Rng
from qres.errors import CorruptTable, EncodingConsumed, WidthMismatch

GARBLER, EVALUATOR = 0, 1
ROW_LEN = 24
TABLE_LEN = 4 * ROW_LEN
SESSION_LEN = 16
_PAD_MASK = (1 << 64) - 1
_HEADER = struct.Struct(">B32s16sBI")


def _lb(x: int) -> bytes:
    return x.to_bytes(LABEL_LEN, "big")


def _li(b: bytes) -> int:
    if len(b) != LABEL_LEN:
        raise CorruptTable(f"wire label must be {LABEL_LEN} bytes, got {len(b)}")
    return int.from_bytes(b, "big")


def _is_free(kind: str, free_xor: bool) -> bool:
    return kind == INV or (free_xor and kind == XOR)


@dataclass
class GarbledCircuit:
    circuit: Circuit
    session_id: bytes
    tables: List[bytes]
    free_xor: bool = False

    def table_bytes(self) -> bytes:
        return b"".join(self.tables)


@dataclass
class OutputDecoding:
    # per output wire: (H(label0), H(label1)) truncated to 16 bytes
    entries: List[Tuple[bytes, bytes]]

    def to_bytes(self) -> bytes:
        return b"".join(h0 + h1 for h0, h1 in self.entries)

    @classmethod
    def from_bytes(cls, data: bytes, n_outputs: int) -> "OutputDecoding":
        if len(data) != 32 * n_outputs:
            raise CorruptTable(f"decoding table must be {32 * n_outputs} bytes, got {len(data)}")
        return cls([(data[32 * i : 32 * i + 16], data[32 * i + 16 : 32 * i + 32]) for i in range(n_outputs)])


@dataclass
class InputEncoding:
    """Label pairs of every input wire; the evaluator half can be released once."""

    garbler_width: int
    pairs: List[Tuple[bytes, bytes]]
    _released: bool = field(default=False, repr=False)

    @property
    def evaluator_width(self) -> int:
        return len(self.pairs) - self.garbler_width

    @property
    def consumed(self) -> bool:
        return self._released

    def garbler_labels(self, bits: Sequence[int]) -> List[bytes]:
        if len(bits) != self.garbler_width:
            raise WidthMismatch(f"garbler input is {self.garbler_width} bits, got {len(bits)}")
        return [self.pairs[i][1 if b else 0] for i, b in enumerate(bits)]

    def garbler_pairs(self) -> List[Tuple[bytes, bytes]]:
        return self.pairs[: self.garbler_width]

    def release_evaluator_pairs(self) -> List[Tuple[bytes, bytes]]:
        """Hand the evaluator's label pairs to the OT sender; allowed once per garbling."""
        if self._released:
            raise EncodingConsumed("evaluator encoding for this garbled circuit was already released")
        self._released = True
        return self.pairs[self.garbler_width :]

    def _select(self, bits: Sequence[int]) -> List[bytes]:
        if len(bits) != self.evaluator_width:
            raise WidthMismatch(f"evaluator input is {self.evaluator_width} bits, got {len(bits)}")
        own = self.pairs[self.garbler_width :]
        return [own[i][1 if b else 0] for i, b in enumerate(bits)]


def _row_key(a: bytes, b: bytes, tweak: bytes) -> int:
    return int.from_bytes(sha256(a + b + tweak).digest()[:ROW_LEN], "big")


def _out_hash(label: bytes, index: int) -> bytes:
    return sha256(label + struct.pack(">I", index) + b"out").digest()[:16]


def garble(c: Circuit, rng: Rng, free_xor: bool = False) -> Tuple[GarbledCircuit, InputEncoding, OutputDecoding]:
    session = rng.bytes(SESSION_LEN)
    n_in = c.n_inputs
    non_free = sum(1 for g in c.gates if not _is_free(g.kind, free_xor))
    per_pair = 1 if free_xor else 2
    pool = rng.bytes(LABEL_LEN * (per_pair * (n_in + non_free) + 1))
    cursor = 0

    def draw() -> int:
        nonlocal cursor
        v = int.from_bytes(pool[cursor : cursor + LABEL_LEN], "big")
        cursor += LABEL_LEN
        return v

    R = draw() | 1

    def fresh_pair() -> Tuple[int, int]:
        l0 = draw()
        if free_xor:
            return l0, l0 ^ R
        l1 = draw()
        return l0, (l1 & ~1) | ((l0 & 1) ^ 1)

    zero = [0] * c.n_wires
    one = [0] * c.n_wires
    for w in range(n_in):
        zero[w], one[w] = fresh_pair()

    tables: List[bytes] = []
    for idx, (kind, a, b, o) in enumerate(c.gates):
        if kind == INV:
            zero[o], one[o] = one[a], zero[a]
            continue
        if free_xor and kind == XOR:
            zero[o] = zero[a] ^ zero[b]
            one[o] = zero[o] ^ R
            continue
        o0, o1 = fresh_pair()
        tweak = struct.pack(">I", idx) + session
        rows = [0, 0, 0, 0]
        pairs_b = ((_lb(zero[b]), zero[b] & 1), (_lb(one[b]), one[b] & 1))
        for va, la in ((0, zero[a]), (1, one[a])):
            la_bytes = _lb(la)
            ca = (la & 1) << 1
            for vb in (0, 1):
                lb_bytes, cb = pairs_b[vb]
                v = (va & vb) if kind == AND else (va ^ vb)
                rows[ca | cb] = _row_key(la_bytes, lb_bytes, tweak) ^ ((o1 if v else o0) << 64)
        tables.append(b"".join(r.to_bytes(ROW_LEN, "big") for r in rows))
        zero[o], one[o] = o0, o1

    enc = InputEncoding(
        garbler_width=c.input_widths[0] if c.input_widths else 0,
        pairs=[(_lb(zero[w]), _lb(one[w])) for w in range(n_in)],
    )
    dec = OutputDecoding(
        [(_out_hash(_lb(zero[w]), i), _out_hash(_lb(one[w]), i)) for i, w in enumerate(c.output_wires)]
    )
    return GarbledCircuit(circuit=c, session_id=session, tables=tables, free_xor=free_xor), enc, dec


def encode_input(enc: InputEncoding, bits: Sequence[int], party: int = GARBLER) -> List[bytes]:
    """Garbler-side encoding. Evaluator labels are only obtainable through oblivious transfer."""
    if party != GARBLER:
        raise ValueError("evaluator input labels are delivered by oblivious transfer only")
    return enc.garbler_labels(bits)


def _check_tables(gc: GarbledCircuit) -> None:
    expected = sum(1 for g in gc.circuit.gates if not _is_free(g.kind, gc.free_xor))
    if len(gc.tables) != expected:
        raise CorruptTable(f"expected {expected} garbled tables, got {len(gc.tables)}")
    for i, t in enumerate(gc.tables):
        if len(t) != TABLE_LEN:
            raise CorruptTable(f"garbled table {i} is {len(t)} bytes, expected {TABLE_LEN}")


def evaluate_garbled(gc: GarbledCircuit, input_labels: Sequence[bytes]) -> List[bytes]:
    c = gc.circuit
    if len(input_labels) != c.n_inputs:
        raise WidthMismatch(f"circuit expects {c.n_inputs} input labels, got {len(input_labels)}")
    _check_tables(gc)
    w = [0] * c.n_wires
    w[: c.n_inputs] = [_li(x) for x in input_labels]
    tables = iter(gc.tables)
    session = gc.session_id
    free_xor = gc.free_xor
    for idx, (kind, a, b, o) in enumerate(c.gates):
        if kind == INV:
            w[o] = w[a]
            continue
        if free_xor and kind == XOR:
            w[o] = w[a] ^ w[b]
            continue
        table = next(tables)
        la, lb = w[a], w[b]
        r = ((la & 1) << 1) | (lb & 1)
        row = int.from_bytes(table[r * ROW_LEN : (r + 1) * ROW_LEN], "big")
        v = row ^ _row_key(_lb(la), _lb(lb), struct.pack(">I", idx) + session)
        if v & _PAD_MASK:
            raise CorruptTable(f"gate {idx}: row integrity check failed")
        w[o] = v >> 64
    return [_lb(w[i]) for i in c.output_wires]


def decode_output(dec: OutputDecoding, output_labels: Sequence[bytes]) -> List[int]:
    if len(output_labels) != len(dec.entries):
        raise WidthMismatch(f"decoding covers {len(dec.entries)} outputs, got {len(output_labels)}")
    bits = []
    for i, (label, (h0, h1)) in enumerate(zip(output_labels, dec.entries)):
        h = _out_hash(label, i)
        if h == h0:
            bits.append(0)
        elif h == h1:
            bits.append(1)
        else:
            raise CorruptTable(f"output label {i} matches neither decoding entry")
    return bits


# ---------- serialization ----------

def serialize_garbled(gc: GarbledCircuit) -> bytes:
    """version(1) ∥ circuit digest(32) ∥ session id(16) ∥ flags(1) ∥ table count(4) ∥ tables."""
    flags = 1 if gc.free_xor else 0
    head = _HEADER.pack(GC_VERSION, gc.circuit.digest, gc.session_id, flags, len(gc.tables))
    return head + gc.table_bytes()


def deserialize_garbled(data: bytes, circuit: Circuit) -> GarbledCircuit:
    if len(data) < _HEADER.size:
        raise CorruptTable("garbled circuit message is truncated")
    version, digest, session, flags, count = _HEADER.unpack_from(data)
    if version != GC_VERSION:
        raise CorruptTable(f"unsupported garbled circuit version {version}")
    if digest != circuit.digest:
        raise CorruptTable("garbled circuit was built for a different circuit")
    body = data[_HEADER.size :]
    if len(body) != count * TABLE_LEN:
        raise CorruptTable(f"expected {count * TABLE_LEN} table bytes, got {len(body)}")
    tables = [body[i * TABLE_LEN : (i + 1) * TABLE_LEN] for i in range(count)]
    gc = GarbledCircuit(circuit=circuit, session_id=session, tables=tables, free_xor=bool(flags & 1))
    _check_tables(gc)
    return gc
