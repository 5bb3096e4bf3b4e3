"""Random sources.

``SystemRng`` draws from the OS CSPRNG; ``DeterministicRng`` expands a seed
with AES-128-CTR so fixtures, scenarios and benchmarks are reproducible.
"""

from __future__ import annotations

import hashlib
import secrets
import threading
from typing import List, Sequence, TypeVar

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from qres.errors import RngFailure

T = TypeVar("T")


class Rng:
    def bytes(self, n: int) -> bytes:  # pragma: no cover - interface
        raise NotImplementedError

    def bits(self, n: int) -> List[int]:
        raw = self.bytes((n + 7) // 8)
        value = int.from_bytes(raw, "big")
        return [(value >> i) & 1 for i in range(n)]

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randbelow bound must be positive")
        nbytes = (n.bit_length() + 7) // 8 + 8
        return int.from_bytes(self.bytes(nbytes), "big") % n

    def sample(self, population: Sequence[T], k: int) -> List[T]:
        pool = list(population)
        if k < 0 or k > len(pool):
            raise ValueError("sample size out of range")
        for i in range(k):
            j = i + self.randbelow(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]


class SystemRng(Rng):
    def bytes(self, n: int) -> bytes:
        try:
            return secrets.token_bytes(n)
        except Exception as e:  # pragma: no cover - OS entropy failure
            raise RngFailure(f"system RNG failed: {e}") from e


class DeterministicRng(Rng):
    def __init__(self, seed):
        if isinstance(seed, int):
            seed = str(seed).encode()
        elif isinstance(seed, str):
            seed = seed.encode("utf-8")
        key = hashlib.sha256(b"qres-rng" + seed).digest()[:16]
        self._enc = Cipher(algorithms.AES(key), modes.CTR(b"\x00" * 16)).encryptor()
        self._lock = threading.Lock()

    def bytes(self, n: int) -> bytes:
        with self._lock:
            return self._enc.update(b"\x00" * n)

    def fork(self, label: str) -> "DeterministicRng":
        """Independent child stream, reproducible from this stream's position."""
        return DeterministicRng(self.bytes(32) + label.encode("utf-8"))


def default_rng() -> Rng:
    return SystemRng()
