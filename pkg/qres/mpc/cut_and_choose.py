"""Cut-and-choose against a garbler that builds a wrong circuit.

The garbler garbles ``n`` copies from independent seeds and commits to each
copy's garbler-input label pairs. The evaluator opens ``n - 1`` of them, has
the garbler reveal their seeds, regarbles and compares byte for byte, and
evaluates the one copy left closed.
"""

from __future__ import annotations

from dataclasses import dataclass
from hashlib import sha256
from typing import Iterable, List, Sequence, Tuple

from qres.circuits.circuit import Circuit
from qres.crypto.rng import DeterministicRng, Rng
from qres.errors import BadIndexSet
from qres.mpc.garbling import GarbledCircuit, InputEncoding, OutputDecoding, garble
from qres.utils import get_logger

logger = get_logger(__name__)

SEED_LEN = 16
COMMIT_NONCE_LEN = 16


def commit_labels(nonce: bytes, pairs: Sequence[Tuple[bytes, bytes]]) -> bytes:
    return sha256(nonce + b"".join(l0 + l1 for l0, l1 in pairs)).digest()


@dataclass
class CacEntry:
    seed: bytes
    nonce: bytes
    garbled: GarbledCircuit
    encoding: InputEncoding
    decoding: OutputDecoding
    commitment: bytes


@dataclass
class CutAndChoosePack:
    circuit: Circuit
    free_xor: bool
    garbler_bits: List[int]
    entries: List[CacEntry]

    @property
    def n(self) -> int:
        return len(self.entries)

    def published(self) -> List[Tuple[GarbledCircuit, bytes]]:
        """What the evaluator sees before choosing: every copy and its commitment."""
        return [(e.garbled, e.commitment) for e in self.entries]

    def unopened(self, reveal_set: Iterable[int]) -> int:
        indices = _check_reveal_set(reveal_set, self.n)
        return next(i for i in range(self.n) if i not in indices)

    def evaluation_material(self, index: int) -> Tuple[GarbledCircuit, List[bytes], InputEncoding, OutputDecoding]:
        e = self.entries[index]
        return e.garbled, e.encoding.garbler_labels(self.garbler_bits), e.encoding, e.decoding


@dataclass(frozen=True)
class CacOpening:
    index: int
    seed: bytes
    nonce: bytes


@dataclass
class CacOpenings:
    circuit: Circuit
    free_xor: bool
    garbled: List[GarbledCircuit]
    commitments: List[bytes]
    openings: List[CacOpening]


def _check_reveal_set(reveal_set: Iterable[int], n: int) -> set:
    indices = list(reveal_set)
    unique = set(indices)
    if len(indices) != n - 1 or len(unique) != len(indices):
        raise BadIndexSet(f"reveal set must name {n - 1} distinct circuits, got {sorted(indices)}")
    if any(not isinstance(i, int) or i < 0 or i >= n for i in unique):
        raise BadIndexSet(f"reveal set index out of range 0..{n - 1}")
    return unique


def choose_reveal_set(n: int, rng: Rng) -> List[int]:
    return sorted(rng.sample(range(n), n - 1))


def cac_prepare(
    c: Circuit,
    garbler_bits: Sequence[int],
    n: int,
    rng: Rng,
    free_xor: bool = False,
) -> CutAndChoosePack:
    if n < 2:
        raise BadIndexSet(f"cut-and-choose needs at least 2 circuits, got {n}")
    entries = []
    for _ in range(n):
        seed = rng.bytes(SEED_LEN)
        nonce = rng.bytes(COMMIT_NONCE_LEN)
        gc, enc, dec = garble(c, DeterministicRng(seed), free_xor=free_xor)
        entries.append(CacEntry(seed, nonce, gc, enc, dec, commit_labels(nonce, enc.garbler_pairs())))
    # width is checked here rather than at evaluation time
    entries[0].encoding.garbler_labels(garbler_bits)
    return CutAndChoosePack(circuit=c, free_xor=free_xor, garbler_bits=list(garbler_bits), entries=entries)


def cac_open(pack: CutAndChoosePack, reveal_set: Iterable[int]) -> CacOpenings:
    indices = sorted(_check_reveal_set(reveal_set, pack.n))
    return CacOpenings(
        circuit=pack.circuit,
        free_xor=pack.free_xor,
        garbled=[e.garbled for e in pack.entries],
        commitments=[e.commitment for e in pack.entries],
        openings=[CacOpening(i, pack.entries[i].seed, pack.entries[i].nonce) for i in indices],
    )


def cac_verify(openings: CacOpenings) -> bool:
    """Regarble every opened copy and compare tables, session id and commitment."""
    for op in openings.openings:
        if op.index >= len(openings.garbled):
            return False
        shown = openings.garbled[op.index]
        gc, enc, _ = garble(openings.circuit, DeterministicRng(op.seed), free_xor=openings.free_xor)
        if gc.session_id != shown.session_id or gc.tables != shown.tables:
            logger.warning("cac mismatch index=%d part=tables", op.index)
            return False
        if commit_labels(op.nonce, enc.garbler_pairs()) != openings.commitments[op.index]:
            logger.warning("cac mismatch index=%d part=commitment", op.index)
            return False
    return True
