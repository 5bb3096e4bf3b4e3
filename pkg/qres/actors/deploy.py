"""Networked deployment: broker, relay and provider daemons wired from config.

Relays and the broker are reached over TCP at the addresses in ``relays.nodes``
and ``broker.listen``. Providers register their rendezvous address with the
first relay and are reached by the broker through the reversed chain.
"""

from __future__ import annotations

from typing import Any, Dict, List, Optional, Tuple

from qres.anonet.onion import HopKeys, address
from qres.anonet.relay import (
    BROKER_ADDRESS,
    HopInfo,
    OnionRoute,
    Relay,
    RelayNetwork,
    remote_endpoint,
    remote_relay,
    rendezvous_frame,
)
from qres.broker.service import BrokerService
from qres.broker.store import FileStore
from qres.circuits.qese import VALIDATED
from qres.crypto.group import base_mul
from qres.crypto.prims import SigKeyPair
from qres.crypto.rng import Rng, default_rng
from qres.errors import ConfigError
from qres.models import StoredSecSla
from qres.mpc.qese import QeseBroker, QeseProvider
from qres.net.transport import TcpEndpoint, serve_tcp
from qres.net.wire import FrameType, raise_for_error
from qres.settings import split_address, weights_from_config
from qres.utils import get_logger, read_json, write_json

logger = get_logger(__name__)


# ---------- relay keys ----------

def relay_keygen(name: str, path: str, rng: Optional[Rng] = None) -> HopKeys:
    keys = HopKeys.generate(rng or default_rng())
    write_json(path, {"name": name, "secret": keys.secret.hex(), "public_key": keys.public.hex()})
    return keys


def load_relay_keys(path: str) -> Tuple[str, HopKeys]:
    try:
        doc = read_json(path)
        secret = bytes.fromhex(doc["secret"])
        keys = HopKeys(secret, base_mul(secret))
    except FileNotFoundError as e:
        raise ConfigError(f"Relay key file not found: {path}") from e
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"Relay key file {path} is malformed: {e}") from e
    if doc.get("public_key") and doc["public_key"] != keys.public.hex():
        raise ConfigError(f"Relay key file {path}: public key does not match the secret")
    return doc["name"], keys


# ---------- addressing ----------

def relay_nodes(cfg: Dict[str, Any]) -> List[Dict[str, Any]]:
    nodes = cfg.get("relays", {}).get("nodes") or []
    if len(nodes) != 3:
        raise ConfigError("relays.nodes must list exactly 3 relays for a networked deployment")
    return nodes


def forward_chain(cfg: Dict[str, Any]) -> List[HopInfo]:
    return [HopInfo(address(n["name"]), bytes.fromhex(n["public_key"])) for n in relay_nodes(cfg)]


def tcp_network(cfg: Dict[str, Any]) -> RelayNetwork:
    """Address book of the configured relays plus the broker."""
    network = RelayNetwork()
    for node in relay_nodes(cfg):
        network.register(node["name"], remote_relay(TcpEndpoint(node["host"], int(node["port"]))))
    network.register(BROKER_ADDRESS, remote_endpoint(TcpEndpoint(*split_address(cfg["broker"]["listen"]))))
    return network


def broker_route(cfg: Dict[str, Any], network: Optional[RelayNetwork] = None, rng: Optional[Rng] = None) -> OnionRoute:
    return OnionRoute(forward_chain(cfg), BROKER_ADDRESS, network or tcp_network(cfg), rng)


# ---------- daemons ----------

def build_broker(cfg: Dict[str, Any], material: Dict[str, str], rng: Optional[Rng] = None) -> BrokerService:
    """Broker service from config and the auditor's material.

    ``auditor.public_key`` in the config is used when the material file does
    not carry one.
    """
    pk_hex = material.get("auditor_public_key") or cfg["auditor"].get("public_key")
    if not pk_hex:
        raise ConfigError("broker needs the auditor public key (material file or auditor.public_key)")
    try:
        auditor_pk = bytes.fromhex(pk_hex)
        k_val = bytes.fromhex(material["k_val"]) if material.get("k_val") else None
        resolve_key = bytes.fromhex(material["resolve_key"]) if material.get("resolve_key") else None
    except ValueError as e:
        raise ConfigError(f"broker key material is malformed: {e}") from e
    if cfg["qese"]["mode"] == VALIDATED and k_val is None:
        raise ConfigError("Validated mode needs k_val in the broker key material")
    qcfg, bcfg = cfg["qese"], cfg["broker"]
    network = tcp_network(cfg)
    reverse = list(reversed(forward_chain(cfg)))

    def connect(record: StoredSecSla) -> OnionRoute:
        return OnionRoute(reverse, bytes.fromhex(record.challenge)[:16], network, rng)

    qese = QeseBroker(
        qcfg["mode"],
        k_val=k_val if qcfg["mode"] == VALIDATED else None,
        rng=rng,
        min_cut_and_choose_n=int(qcfg["cut_and_choose_n"]) if qcfg["cut_and_choose"] else 0,
    )
    return BrokerService(
        FileStore(bcfg["store_path"]),
        auditor_pk,
        qese,
        connect,
        weights_from_config(cfg),
        scheme=bcfg["scheme"],
        min_query_interval_s=float(bcfg["min_query_interval_s"]),
        max_workers=int(bcfg["max_workers"]),
        auditor_channel=TcpEndpoint(*split_address(cfg["auditor"]["address"])),
        resolve_key=resolve_key,
    )


def serve_broker(cfg: Dict[str, Any], material: Dict[str, str], rng: Optional[Rng] = None):
    service = build_broker(cfg, material, rng)
    host, port = split_address(cfg["broker"]["listen"])
    logger.info("broker store=%s providers=%d", cfg["broker"]["store_path"], len(service.store.list()))
    return serve_tcp(service.handle, host, port)


def serve_relay(cfg: Dict[str, Any], name: str, keys: HopKeys, listen: Optional[str] = None):
    node = next((n for n in relay_nodes(cfg) if n["name"] == name), None)
    if node is None and listen is None:
        raise ConfigError(f"relay {name!r} is not listed in relays.nodes and no --listen was given")
    host, port = split_address(listen) if listen else (node["host"], int(node["port"]))
    relay = Relay(name, keys, tcp_network(cfg))
    return serve_tcp(relay.handle, host, port)


def serve_provider(
    cfg: Dict[str, Any],
    provider: QeseProvider,
    rendezvous: bytes,
    owner: SigKeyPair,
    listen: str,
    advertise: Optional[str] = None,
):
    """Serve keyword sessions and announce the rendezvous address to the entry relay."""
    host, port = split_address(listen)
    server = serve_tcp(provider.handle, host, port)
    entry = relay_nodes(cfg)[0]
    where = advertise or f"{host}:{server.server_address[1]}"
    channel = TcpEndpoint(entry["host"], int(entry["port"]))
    try:
        raise_for_error(channel.request(rendezvous_frame(owner, rendezvous, where)), FrameType.ACK)
    except BaseException:
        server.server_close()
        raise
    finally:
        channel.close()
    logger.info("provider serving mode=%s entry=%s", provider.mode, entry["name"])
    return server
