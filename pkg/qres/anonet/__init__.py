"""Provider anonymity: auditor registry, challenges and onion relays."""

from .auditor import (
    Auditor,
    AuthChallenge,
    ProviderCert,
    make_challenge,
    make_provider_cert,
    secsla_canonical,
    verify_cert,
    verify_secsla,
)
from .onion import HopKeys, address, onion_build, onion_peel
from .relay import BROKER_ADDRESS, OnionRoute, Relay, RelayNetwork, build_relays, forward_hops, reverse_hops

__all__ = [
    "Auditor",
    "AuthChallenge",
    "BROKER_ADDRESS",
    "HopKeys",
    "OnionRoute",
    "ProviderCert",
    "Relay",
    "RelayNetwork",
    "address",
    "build_relays",
    "forward_hops",
    "make_challenge",
    "make_provider_cert",
    "onion_build",
    "onion_peel",
    "reverse_hops",
    "secsla_canonical",
    "verify_cert",
    "verify_secsla",
]
