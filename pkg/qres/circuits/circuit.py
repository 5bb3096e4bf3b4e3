"""Boolean circuits in Bristol Fashion: representation, parsing, plain evaluation.

Bit order at circuit boundaries is byte-major and MSB-first within each byte:
input/output bit ``8*i + j`` is bit ``7 - j`` of byte ``i``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, List, NamedTuple, Sequence, Tuple

from qres.errors import FormatError, NonTopological, UnsupportedGateKind, WidthMismatch

AND, XOR, INV = "AND", "XOR", "INV"
_KIND_ALIASES = {"AND": AND, "XOR": XOR, "INV": INV, "NOT": INV}


class Gate(NamedTuple):
    kind: str
    a: int
    b: int  # -1 for INV
    out: int


@dataclass
class Circuit:
    n_wires: int
    input_widths: Tuple[int, ...]
    output_widths: Tuple[int, ...]
    gates: List[Gate]
    name: str = ""

    @property
    def n_inputs(self) -> int:
        return sum(self.input_widths)

    @property
    def n_outputs(self) -> int:
        return sum(self.output_widths)

    @property
    def output_wires(self) -> range:
        return range(self.n_wires - self.n_outputs, self.n_wires)

    def party_offset(self, party: int) -> int:
        return sum(self.input_widths[:party])

    @cached_property
    def digest(self) -> bytes:
        return hashlib.sha256(serialize_bristol(self).encode("ascii")).digest()


def census(c: Circuit) -> Dict[str, int]:
    counts = {AND: 0, XOR: 0, INV: 0}
    for g in c.gates:
        counts[g.kind] += 1
    return counts


def add_census(*parts: Dict[str, int]) -> Dict[str, int]:
    total = {AND: 0, XOR: 0, INV: 0}
    for part in parts:
        for k, v in part.items():
            total[k] += v
    return total


def validate_circuit(c: Circuit) -> Circuit:
    """Check wire ranges, single assignment and topological gate order."""
    if c.n_inputs > c.n_wires or c.n_outputs > c.n_wires:
        raise FormatError("circuit declares fewer wires than its inputs or outputs need")
    defined = bytearray(c.n_wires)
    for w in range(min(c.n_inputs, c.n_wires)):
        defined[w] = 1
    for idx, g in enumerate(c.gates):
        ins = (g.a,) if g.kind == INV else (g.a, g.b)
        for w in ins + (g.out,):
            if not 0 <= w < c.n_wires:
                raise FormatError(f"gate {idx} references wire {w} outside [0, {c.n_wires})")
        for w in ins:
            if not defined[w]:
                raise NonTopological(f"gate {idx} reads wire {w} before it is assigned")
        if defined[g.out]:
            raise NonTopological(f"gate {idx} reassigns wire {g.out}")
        defined[g.out] = 1
    for w in c.output_wires:
        if not defined[w]:
            raise FormatError(f"output wire {w} is never assigned")
    return c


def parse_bristol(text: str, name: str = "") -> Circuit:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if len(lines) < 3:
        raise FormatError("Bristol file needs a header of three lines")
    try:
        n_gates, n_wires = (int(x) for x in lines[0].split())
        in_hdr = [int(x) for x in lines[1].split()]
        out_hdr = [int(x) for x in lines[2].split()]
    except ValueError as e:
        raise FormatError(f"malformed Bristol header: {e}") from e
    if not in_hdr or in_hdr[0] != len(in_hdr) - 1 or not out_hdr or out_hdr[0] != len(out_hdr) - 1:
        raise FormatError("input/output header counts do not match their value lists")
    if n_gates < 0 or n_wires <= 0:
        raise FormatError("gate and wire counts must be positive")
    body = lines[3:]
    if len(body) != n_gates:
        raise FormatError(f"header declares {n_gates} gates, file has {len(body)}")

    gates: List[Gate] = []
    for lineno, ln in enumerate(body, start=4):
        parts = ln.split()
        try:
            n_in, n_out = int(parts[0]), int(parts[1])
        except (ValueError, IndexError) as e:
            raise FormatError(f"line {lineno}: bad gate arity") from e
        if len(parts) != 2 + n_in + n_out + 1:
            raise FormatError(f"line {lineno}: expected {n_in + n_out + 3} fields, got {len(parts)}")
        kind = _KIND_ALIASES.get(parts[-1].upper())
        if kind is None:
            raise UnsupportedGateKind(f"line {lineno}: gate kind {parts[-1]!r} is not supported")
        try:
            wires = [int(x) for x in parts[2:-1]]
        except ValueError as e:
            raise FormatError(f"line {lineno}: non-integer wire id") from e
        expected_in = 1 if kind == INV else 2
        if n_in != expected_in or n_out != 1:
            raise FormatError(f"line {lineno}: {kind} takes {expected_in} inputs and 1 output")
        if kind == INV:
            gates.append(Gate(INV, wires[0], -1, wires[1]))
        else:
            gates.append(Gate(kind, wires[0], wires[1], wires[2]))

    c = Circuit(
        n_wires=n_wires,
        input_widths=tuple(in_hdr[1:]),
        output_widths=tuple(out_hdr[1:]),
        gates=gates,
        name=name,
    )
    return validate_circuit(c)


def serialize_bristol(c: Circuit) -> str:
    out = [
        f"{len(c.gates)} {c.n_wires}",
        " ".join(str(x) for x in (len(c.input_widths),) + tuple(c.input_widths)),
        " ".join(str(x) for x in (len(c.output_widths),) + tuple(c.output_widths)),
        "",
    ]
    for g in c.gates:
        if g.kind == INV:
            out.append(f"1 1 {g.a} {g.out} INV")
        else:
            out.append(f"2 1 {g.a} {g.b} {g.out} {g.kind}")
    return "\n".join(out) + "\n"


def _check_width(c: Circuit, n: int) -> None:
    if n != c.n_inputs:
        raise WidthMismatch(f"circuit expects {c.n_inputs} input bits, got {n}")


def eval_plain(c: Circuit, inputs: Sequence[int]) -> List[int]:
    _check_width(c, len(inputs))
    w = [0] * c.n_wires
    w[: c.n_inputs] = [1 if b else 0 for b in inputs]
    for kind, a, b, o in c.gates:
        if kind == XOR:
            w[o] = w[a] ^ w[b]
        elif kind == AND:
            w[o] = w[a] & w[b]
        else:
            w[o] = w[a] ^ 1
    return [w[i] for i in c.output_wires]


def eval_plain_batch(c: Circuit, vectors: Sequence[Sequence[int]]) -> List[List[int]]:
    """Evaluate many input vectors at once; each wire carries one bit per vector."""
    if not vectors:
        return []
    for v in vectors:
        _check_width(c, len(v))
    n = len(vectors)
    mask = (1 << n) - 1
    w = [0] * c.n_wires
    for i in range(c.n_inputs):
        packed = 0
        for j, v in enumerate(vectors):
            if v[i]:
                packed |= 1 << j
        w[i] = packed
    for kind, a, b, o in c.gates:
        if kind == XOR:
            w[o] = w[a] ^ w[b]
        elif kind == AND:
            w[o] = w[a] & w[b]
        else:
            w[o] = w[a] ^ mask
    outs = [w[i] for i in c.output_wires]
    return [[(x >> j) & 1 for x in outs] for j in range(n)]


# ---------- bit helpers ----------

def bytes_to_bits(data: bytes) -> List[int]:
    return [(byte >> (7 - j)) & 1 for byte in data for j in range(8)]


def bits_to_bytes(bits: Iterable[int]) -> bytes:
    bits = list(bits)
    if len(bits) % 8:
        raise WidthMismatch("bit vector length must be a multiple of 8")
    out = bytearray()
    for i in range(0, len(bits), 8):
        v = 0
        for b in bits[i : i + 8]:
            v = (v << 1) | (b & 1)
        out.append(v)
    return bytes(out)
