"""The circuits garbled per keyword.

Basic: garbler key (128) | evaluator block (128) -> AES_k(block).
Validated: garbler key (128) ∥ HMAC inner midstate (256) ∥ outer midstate (256)
| evaluator block (128) ∥ tag (256) -> AES_k(block) when the tag equals
HMAC(k_val, first 8 bytes of block) and the last 8 bytes are the 0x08 pad,
else the all-zero block.
"""

from __future__ import annotations

import os
from functools import lru_cache
from typing import Dict, Optional

from qres.circuits.aes import build_aes128
from qres.circuits.builder import CircuitBuilder
from qres.circuits.circuit import AND, INV, XOR, Circuit, bytes_to_bits, parse_bristol, serialize_bristol
from qres.circuits.sha import build_hmac_sha256
from qres.errors import ResourceMissing
from qres.utils import get_logger, load_file

logger = get_logger(__name__)

BASIC = "Basic"
VALIDATED = "Validated"
MODES = (BASIC, VALIDATED)

BOTTOM = bytes(16)

# tag comparator (XOR + INV per bit), pad check (INV per zero bit), one AND tree, output mux
GLUE_CENSUS: Dict[str, int] = {XOR: 256, INV: 256 + 56, AND: 319 + 128}

_PAD_BITS = bytes_to_bits(bytes([0x08]) * 8)

RESOURCE_FILES = {"aes128": "aes_128.txt", "hmac_sha256": "hmac_sha256_token.txt"}
RESOURCE_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "resources")


def load_resource(name: str, resource_dir: Optional[str] = None) -> Circuit:
    path = os.path.join(resource_dir or RESOURCE_DIR, RESOURCE_FILES[name])
    if not os.path.exists(path):
        raise ResourceMissing(f"circuit resource {name} not found at {path}")
    return parse_bristol(load_file(path), name=name)


def export_resources(resource_dir: Optional[str] = None) -> Dict[str, str]:
    """Write the generated component circuits as Bristol files."""
    target = resource_dir or RESOURCE_DIR
    os.makedirs(target, exist_ok=True)
    written = {}
    for name, build in (("aes128", build_aes128), ("hmac_sha256", build_hmac_sha256)):
        path = os.path.join(target, RESOURCE_FILES[name])
        with open(path, "w", encoding="ascii") as f:
            f.write(serialize_bristol(build()))
        written[name] = path
    logger.info("circuits exported dir=%s files=%d", target, len(written))
    return written


def _components(resource_dir: Optional[str]):
    if resource_dir is None:
        return build_aes128(), build_hmac_sha256()
    return load_resource("aes128", resource_dir), load_resource("hmac_sha256", resource_dir)


@lru_cache(maxsize=None)
def _build(mode: str, resource_dir: Optional[str]) -> Circuit:
    aes, hmac = _components(resource_dir)
    if mode == BASIC:
        b = CircuitBuilder((128, 128), name="qese_basic")
        out = b.embed(aes, b.inputs(0) + b.inputs(1))
        return b.finish(out)

    b = CircuitBuilder((128 + 512, 128 + 256), name="qese_validated")
    garbler, evaluator = b.inputs(0), b.inputs(1)
    key, midstates = garbler[:128], garbler[128:]
    block, tag = evaluator[:128], evaluator[128:]
    cipher = b.embed(aes, key + block)
    mac = b.embed(hmac, midstates + block[:64])
    tag_ok = [b.inv(b.xor(t, m)) for t, m in zip(tag, mac)]
    pad_ok = [w if bit else b.inv(w) for w, bit in zip(block[64:], _PAD_BITS)]
    eq = b.and_tree(tag_ok + pad_ok)
    return b.finish([b.and_(eq, c) for c in cipher])


def build_qese_circuit(mode: str = BASIC, resource_dir: Optional[str] = None) -> Circuit:
    if mode not in MODES:
        raise ValueError(f"unknown QeSe mode {mode!r}, expected one of {MODES}")
    return _build(mode, resource_dir)


def garbler_width(mode: str) -> int:
    return 128 if mode == BASIC else 128 + 512


def evaluator_width(mode: str) -> int:
    return 128 if mode == BASIC else 128 + 256
