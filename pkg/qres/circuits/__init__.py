"""Boolean circuits: Bristol Fashion I/O, plain evaluation and generators."""

from .aes import build_aes128
from .builder import CircuitBuilder
from .circuit import (
    Circuit,
    Gate,
    bits_to_bytes,
    bytes_to_bits,
    census,
    eval_plain,
    eval_plain_batch,
    parse_bristol,
    serialize_bristol,
)
from .qese import BASIC, BOTTOM, VALIDATED, build_qese_circuit
from .sha import build_hmac_sha256

__all__ = [
    "BASIC",
    "BOTTOM",
    "Circuit",
    "CircuitBuilder",
    "Gate",
    "VALIDATED",
    "bits_to_bytes",
    "build_aes128",
    "build_hmac_sha256",
    "build_qese_circuit",
    "bytes_to_bits",
    "census",
    "eval_plain",
    "eval_plain_batch",
    "parse_bristol",
    "serialize_bristol",
]
