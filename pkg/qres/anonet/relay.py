"""Relay nodes, the address book they forward through, and the originator's route."""

from __future__ import annotations

import threading
from dataclasses import dataclass
from hashlib import sha256
from typing import Callable, Dict, List, Sequence

from qres.anonet.onion import HopKeys, address, onion_build, onion_peel, unwrap_reply, wrap_reply
from qres.crypto.prims import SigKeyPair, sign, verify
from qres.crypto.rng import Rng, default_rng
from qres.errors import AccessDenied, NoRoute, WireError
from qres.net.transport import Handler, TcpEndpoint, safe_handle
from qres.net.wire import Frame, FrameType, frame_decode, frame_encode, raise_for_error
from qres.settings import split_address
from qres.utils import get_logger

logger = get_logger(__name__)

Deliver = Callable[[bytes], bytes]

BROKER_ADDRESS = address("broker")

_RENDEZVOUS_DOMAIN = b"QRES-RENDEZVOUS-v1"
_PK_LEN = 32
_SIG_LEN = 64


def rendezvous_keys(secret: bytes, nonce: bytes) -> SigKeyPair:
    """Signing key that owns a rendezvous address; only the holder of the auth secret can derive it."""
    return SigKeyPair.from_private_bytes(sha256(_RENDEZVOUS_DOMAIN + secret + nonce).digest())


def rendezvous_frame(owner: SigKeyPair, addr: bytes, where: str) -> Frame:
    """RENDEZVOUS payload: address (16) | owner key (32) | signature (64) | "host:port"."""
    a, w = address(addr), where.encode("utf-8")
    return Frame(FrameType.RENDEZVOUS, a + owner.pk + sign(owner, _RENDEZVOUS_DOMAIN + a + w) + w)


def local_endpoint(handler: Handler) -> Deliver:
    """Final destination inside this process: bytes are encoded frames."""
    def deliver(data: bytes) -> bytes:
        return frame_encode(safe_handle(handler, frame_decode(data)))
    return deliver


def remote_endpoint(channel) -> Deliver:
    def deliver(data: bytes) -> bytes:
        return frame_encode(channel.request(frame_decode(data)))
    return deliver


def remote_relay(channel) -> Deliver:
    def deliver(data: bytes) -> bytes:
        return raise_for_error(channel.request(Frame(FrameType.RELAY, data)), FrameType.RELAY).payload
    return deliver


class RelayNetwork:
    """Address book: 16-byte address -> delivery function."""

    def __init__(self):
        self._nodes: Dict[bytes, Deliver] = {}
        self._lock = threading.Lock()

    def register(self, addr, deliver: Deliver) -> None:
        with self._lock:
            self._nodes[address(addr)] = deliver

    def unregister(self, addr) -> None:
        with self._lock:
            self._nodes.pop(address(addr), None)

    def knows(self, addr) -> bool:
        return address(addr) in self._nodes

    def deliver(self, addr, data: bytes) -> bytes:
        fn = self._nodes.get(address(addr))
        if fn is None:
            raise NoRoute(f"no node registered at address {address(addr).rstrip(bytes(1))!r}")
        return fn(data)


class Relay:
    """Peels one layer, forwards, and seals the reply on the way back."""

    def __init__(self, name: str, keys: HopKeys, network: RelayNetwork):
        self.name = name
        self.keys = keys
        self.network = network
        self.address = address(name)
        self._rendezvous: Dict[bytes, Deliver] = {}
        # rendezvous address -> owner key pinned by its first registration
        self._owners: Dict[bytes, bytes] = {}
        self._lock = threading.Lock()
        self.forwarded = 0
        # last (incoming, outgoing) packet pair, for inspection in tests
        self.last_seen = (b"", b"")

    @property
    def public_key(self) -> bytes:
        return self.keys.public

    def register_rendezvous(self, addr: bytes, deliver: Deliver, owner_pk: bytes) -> None:
        """Point a rendezvous address at a provider; re-pointing needs the same owner key."""
        a = address(addr)
        with self._lock:
            known = self._owners.get(a)
            if known is not None and known != owner_pk:
                raise AccessDenied("rendezvous address is owned by another key")
            self._owners[a] = owner_pk
            self._rendezvous[a] = deliver

    def forward(self, packet: bytes) -> bytes:
        peeled = onion_peel(self.keys, packet)
        self.last_seen = (packet, peeled.inner)
        target = self._rendezvous.get(peeled.next_addr)
        reply = target(peeled.inner) if target else self.network.deliver(peeled.next_addr, peeled.inner)
        self.forwarded += 1
        return wrap_reply(peeled.key, reply)

    def handle(self, frame: Frame) -> Frame:
        if frame.type == FrameType.RELAY:
            return Frame(FrameType.RELAY, self.forward(frame.payload))
        if frame.type == FrameType.RENDEZVOUS:
            owner_pk, where = self._check_rendezvous(frame.payload)
            host, port = split_address(where)
            self.register_rendezvous(frame.payload[:16], remote_endpoint(TcpEndpoint(host, port)), owner_pk)
            logger.info("relay rendezvous registered relay=%s", self.name)
            return Frame(FrameType.ACK)
        raise WireError(f"relay does not serve {frame.type.name}")

    @staticmethod
    def _check_rendezvous(payload: bytes):
        head = 16 + _PK_LEN + _SIG_LEN
        if len(payload) <= head:
            raise WireError("RENDEZVOUS payload is too short")
        addr, owner_pk = payload[:16], payload[16:16 + _PK_LEN]
        sig, raw = payload[16 + _PK_LEN:head], payload[head:]
        if not verify(owner_pk, _RENDEZVOUS_DOMAIN + addr + raw, sig):
            raise AccessDenied("RENDEZVOUS signature does not verify")
        try:
            return owner_pk, raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise WireError(f"RENDEZVOUS endpoint is not text: {e}") from e

    def attach(self) -> None:
        self.network.register(self.address, self.forward)


@dataclass(frozen=True)
class HopInfo:
    address: bytes
    public_key: bytes


class OnionRoute:
    """Originator side of a fixed 3-hop route; usable anywhere a frame channel is expected."""

    def __init__(self, hops: Sequence[HopInfo], destination, network: RelayNetwork, rng: Rng = None):
        if len(hops) != 3:
            raise ValueError("onion routes have exactly 3 hops")
        self.hops = list(hops)
        self.destination = address(destination)
        self.network = network
        self.rng = rng or default_rng()
        self.sent = 0

    def request(self, frame: Frame) -> Frame:
        next_addrs = [h.address for h in self.hops[1:]] + [self.destination]
        packet, keys = onion_build(
            frame_encode(frame), [h.public_key for h in self.hops], next_addrs, self.rng
        )
        reply = unwrap_reply(keys, self.network.deliver(self.hops[0].address, packet))
        self.sent += 1
        return frame_decode(reply)

    send = request

    def close(self) -> None:
        pass


def forward_hops(relays: Sequence[Relay]) -> List[HopInfo]:
    return [HopInfo(r.address, r.public_key) for r in relays]


def reverse_hops(relays: Sequence[Relay]) -> List[HopInfo]:
    return [HopInfo(r.address, r.public_key) for r in reversed(relays)]


def build_relays(names: Sequence[str], network: RelayNetwork, rng: Rng) -> List[Relay]:
    relays = [Relay(n, HopKeys.generate(rng), network) for n in names]
    for r in relays:
        r.attach()
    return relays
