"""Circuit construction with constant folding.

Wires are plain ints; the two constants are the sentinels ``ZERO`` and
``ONE``. Gates whose value is decided by a constant input are folded away,
so generators can mix fixed data (round constants, padding) with wires.
Multi-bit values inside the builder are lists of wires, least significant
bit first.
"""

from __future__ import annotations

from typing import Callable, Dict, List, Sequence, Union

from qres.circuits.circuit import AND, INV, XOR, Circuit, Gate, validate_circuit
from qres.errors import WidthMismatch


class _Const:
    __slots__ = ("value",)

    def __init__(self, value: int):
        self.value = value

    def __repr__(self) -> str:
        return f"<const {self.value}>"


ZERO = _Const(0)
ONE = _Const(1)

Wire = Union[int, _Const]


def const(bit: int) -> _Const:
    return ONE if bit else ZERO


class CircuitBuilder:
    def __init__(self, input_widths: Sequence[int], name: str = ""):
        self.input_widths = tuple(input_widths)
        self.name = name
        self._n_inputs = sum(self.input_widths)
        self._next = self._n_inputs
        self._gates: List[Gate] = []
        self._inv_of: Dict[int, int] = {}

    def inputs(self, party: int) -> List[int]:
        start = sum(self.input_widths[:party])
        return list(range(start, start + self.input_widths[party]))

    def _emit(self, kind: str, a: int, b: int) -> int:
        out = self._next
        self._next += 1
        self._gates.append(Gate(kind, a, b, out))
        return out

    # ---------- single-bit gates ----------

    def xor(self, a: Wire, b: Wire) -> Wire:
        if isinstance(a, _Const):
            a, b = b, a
        if isinstance(b, _Const):
            if isinstance(a, _Const):
                return const(a.value ^ b.value)
            return a if b is ZERO else self.inv(a)
        if a == b:
            return ZERO
        return self._emit(XOR, a, b)

    def and_(self, a: Wire, b: Wire) -> Wire:
        if isinstance(a, _Const):
            a, b = b, a
        if isinstance(b, _Const):
            if isinstance(a, _Const):
                return const(a.value & b.value)
            return ZERO if b is ZERO else a
        if a == b:
            return a
        return self._emit(AND, a, b)

    def inv(self, a: Wire) -> Wire:
        if isinstance(a, _Const):
            return const(a.value ^ 1)
        if a in self._inv_of:
            return self._inv_of[a]
        out = self._emit(INV, a, -1)
        self._inv_of[out] = a
        self._inv_of[a] = out
        return out

    # ---------- vectors ----------

    def xor_vec(self, a: Sequence[Wire], b: Sequence[Wire]) -> List[Wire]:
        if len(a) != len(b):
            raise WidthMismatch(f"xor of {len(a)}-bit and {len(b)}-bit values")
        return [self.xor(x, y) for x, y in zip(a, b)]

    def and_vec(self, a: Sequence[Wire], b: Sequence[Wire]) -> List[Wire]:
        if len(a) != len(b):
            raise WidthMismatch(f"and of {len(a)}-bit and {len(b)}-bit values")
        return [self.and_(x, y) for x, y in zip(a, b)]

    def xor_many(self, wires: Sequence[Wire]) -> Wire:
        acc: Wire = ZERO
        for w in wires:
            acc = self.xor(acc, w)
        return acc

    def and_tree(self, wires: Sequence[Wire]) -> Wire:
        layer = list(wires)
        if not layer:
            return ONE
        while len(layer) > 1:
            nxt = [self.and_(layer[i], layer[i + 1]) for i in range(0, len(layer) - 1, 2)]
            if len(layer) % 2:
                nxt.append(layer[-1])
            layer = nxt
        return layer[0]

    def constant(self, value: int, width: int) -> List[Wire]:
        return [const((value >> i) & 1) for i in range(width)]

    def linear(self, x: Sequence[Wire], fn: Callable[[int], int], out_width: int = None) -> List[Wire]:
        """Apply a GF(2)-linear map given as a function on ints (bit i = wire i)."""
        out_width = len(x) if out_width is None else out_width
        columns = [fn(1 << j) for j in range(len(x))]
        return [
            self.xor_many([x[j] for j in range(len(x)) if (columns[j] >> i) & 1])
            for i in range(out_width)
        ]

    def add32(self, a: Sequence[Wire], b: Sequence[Wire]) -> List[Wire]:
        """Ripple-carry addition mod 2^n, one AND per carry bit."""
        if len(a) != len(b):
            raise WidthMismatch("adder operands differ in width")
        out: List[Wire] = []
        carry: Wire = ZERO
        for i in range(len(a)):
            out.append(self.xor(self.xor(a[i], b[i]), carry))
            if i + 1 < len(a):
                carry = self.xor(carry, self.and_(self.xor(a[i], carry), self.xor(b[i], carry)))
        return out

    def embed(self, c: Circuit, inputs: Sequence[Wire]) -> List[Wire]:
        """Replay an existing circuit's gates on the given input wires."""
        if len(inputs) != c.n_inputs:
            raise WidthMismatch(f"embedding needs {c.n_inputs} inputs, got {len(inputs)}")
        w: List[Wire] = [ZERO] * c.n_wires
        w[: c.n_inputs] = list(inputs)
        for kind, a, b, o in c.gates:
            if kind == XOR:
                w[o] = self.xor(w[a], w[b])
            elif kind == AND:
                w[o] = self.and_(w[a], w[b])
            else:
                w[o] = self.inv(w[a])
        return [w[i] for i in c.output_wires]

    # ---------- finishing ----------

    def finish(self, outputs: Sequence[Wire], output_widths: Sequence[int] = None) -> Circuit:
        """Renumber wires so the outputs occupy the last wire ids, as Bristol requires."""
        output_widths = tuple(output_widths or (len(outputs),))
        if sum(output_widths) != len(outputs):
            raise WidthMismatch("output widths do not add up to the output count")
        outputs = self._materialize(outputs)

        n_out = len(outputs)
        n_wires = self._next
        out_pos = {w: n_wires - n_out + i for i, w in enumerate(outputs)}
        mapping = list(range(n_wires))
        nxt = self._n_inputs
        for g in self._gates:
            if g.out in out_pos:
                mapping[g.out] = out_pos[g.out]
            else:
                mapping[g.out] = nxt
                nxt += 1
        gates = [
            Gate(g.kind, mapping[g.a], -1 if g.kind == INV else mapping[g.b], mapping[g.out])
            for g in self._gates
        ]
        c = Circuit(
            n_wires=n_wires,
            input_widths=self.input_widths,
            output_widths=output_widths,
            gates=gates,
            name=self.name,
        )
        return validate_circuit(c)

    def _materialize(self, outputs: Sequence[Wire]) -> List[int]:
        """Outputs must be distinct gate outputs; buffer constants, inputs and repeats."""
        seen = set()
        out: List[int] = []
        zero_wire = None
        for w in outputs:
            if isinstance(w, _Const) or w < self._n_inputs or w in seen:
                if zero_wire is None:
                    zero_wire = self._emit(XOR, 0, 0)
                if isinstance(w, _Const):
                    w = zero_wire if w is ZERO else self._emit(INV, zero_wire, -1)
                else:
                    w = self._emit(XOR, w, zero_wire)
            seen.add(w)
            out.append(w)
        return out


def bytes_of(io_bits: Sequence[Wire]) -> List[List[Wire]]:
    """Split boundary-ordered bits (MSB first per byte) into LSB-first bytes."""
    if len(io_bits) % 8:
        raise WidthMismatch("boundary bit count must be a multiple of 8")
    return [[io_bits[8 * k + 7 - j] for j in range(8)] for k in range(len(io_bits) // 8)]


def io_bits_of(byte_list: Sequence[Sequence[Wire]]) -> List[Wire]:
    """Inverse of ``bytes_of``."""
    return [byte[7 - j] for byte in byte_list for j in range(8)]
