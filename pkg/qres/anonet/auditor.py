"""The trusted auditor: provider registration, authentication secrets,
signatures over encrypted token lists and identity resolution."""

from __future__ import annotations

import struct
import threading
from dataclasses import dataclass
from hashlib import sha256
from typing import Dict, Optional, Sequence

from qres.config.constants import NONCE_LEN, SYM_KEY_LEN
from qres.crypto.prims import SigKeyPair, mac_tag, mac_verify, sign, sign_keygen, verify
from qres.crypto.rng import Rng, default_rng
from qres.errors import AccessDenied, AlreadyRegistered, CertInvalid, Unresolvable, WireError
from qres.net.wire import Frame, FrameType, json_frame, parse_json
from qres.utils import get_logger

logger = get_logger(__name__)

AUTH_SECRET_LEN = 16
_CERT_DOMAIN = b"QRES-CERT-v1"
_SECSLA_DOMAIN = b"QRES-SECSLA-v1"
_RESOLVE_DOMAIN = b"QRES-RESOLVE-v1"


@dataclass(frozen=True)
class ProviderCert:
    """Self-signed statement binding a provider id to its signing key."""

    provider_id: str
    public_key: bytes
    signature: bytes

    def signed_bytes(self) -> bytes:
        return _cert_message(self.provider_id, self.public_key)

    def to_dict(self) -> dict:
        return {
            "provider_id": self.provider_id,
            "public_key": self.public_key.hex(),
            "signature": self.signature.hex(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProviderCert":
        try:
            return cls(d["provider_id"], bytes.fromhex(d["public_key"]), bytes.fromhex(d["signature"]))
        except (KeyError, TypeError, ValueError) as e:
            raise CertInvalid(f"unreadable provider certificate: {e}") from e


def _cert_message(provider_id: str, public_key: bytes) -> bytes:
    pid = provider_id.encode("utf-8")
    return _CERT_DOMAIN + struct.pack(">H", len(pid)) + pid + public_key


def make_provider_cert(provider_id: str, keys: SigKeyPair) -> ProviderCert:
    return ProviderCert(provider_id, keys.pk, sign(keys, _cert_message(provider_id, keys.pk)))


def verify_cert(cert: ProviderCert) -> None:
    if not cert.provider_id or len(cert.provider_id) > 256:
        raise CertInvalid("provider id must be 1..256 characters")
    if not verify(cert.public_key, cert.signed_bytes(), cert.signature):
        raise CertInvalid(f"certificate signature for {cert.provider_id} does not verify")


@dataclass(frozen=True)
class AuthChallenge:
    nonce: bytes
    challenge: bytes

    @property
    def anonymous_id(self) -> str:
        return self.challenge.hex()

    @property
    def rendezvous(self) -> bytes:
        return self.challenge[:16]

    def to_dict(self) -> dict:
        return {"nonce": self.nonce.hex(), "challenge": self.challenge.hex()}

    @classmethod
    def from_dict(cls, d: dict) -> "AuthChallenge":
        return cls(bytes.fromhex(d["nonce"]), bytes.fromhex(d["challenge"]))


def challenge_digest(nonce: bytes, secret: bytes) -> bytes:
    return sha256(nonce + secret).digest()


def make_challenge(secret: bytes, rng: Rng) -> AuthChallenge:
    nonce = rng.bytes(NONCE_LEN)
    return AuthChallenge(nonce, challenge_digest(nonce, secret))


def secsla_canonical(challenge: bytes, tokens: Sequence[bytes]) -> bytes:
    """Bytes the auditor signs: domain | challenge | count | encrypted tokens in order."""
    return _SECSLA_DOMAIN + challenge + struct.pack(">I", len(tokens)) + b"".join(tokens)


def verify_secsla(auditor_pk: bytes, challenge: bytes, tokens: Sequence[bytes], signature: bytes) -> bool:
    return verify(auditor_pk, secsla_canonical(challenge, tokens), signature)


def resolve_tag(resolve_key: bytes, nonce: bytes, challenge: bytes) -> bytes:
    return mac_tag(resolve_key, _RESOLVE_DOMAIN + nonce + challenge)


def resolve_request(resolve_key: bytes, chall: AuthChallenge) -> Frame:
    """RESOLVE_REQUEST authenticated with the key the auditor shares with the broker."""
    body = chall.to_dict()
    body["tag"] = resolve_tag(resolve_key, chall.nonce, chall.challenge).hex()
    return json_frame(FrameType.RESOLVE_REQUEST, body)


class Auditor:
    def __init__(self, keys: SigKeyPair, k_val: bytes, rng: Optional[Rng] = None, resolve_key: Optional[bytes] = None):
        if len(k_val) != SYM_KEY_LEN:
            raise ValueError(f"validation key must be {SYM_KEY_LEN} bytes")
        self.keys = keys
        self.k_val = k_val
        self.rng = rng or default_rng()
        self.resolve_key = resolve_key or self.rng.bytes(SYM_KEY_LEN)
        if len(self.resolve_key) != SYM_KEY_LEN:
            raise ValueError(f"resolve key must be {SYM_KEY_LEN} bytes")
        # provider id -> signing key vetted out of band
        self._enrolled: Dict[str, bytes] = {}
        self._secrets: Dict[bytes, str] = {}
        self._by_id: Dict[str, bytes] = {}
        self._lock = threading.Lock()

    @classmethod
    def generate(cls, rng: Rng) -> "Auditor":
        return cls(sign_keygen(rng), rng.bytes(SYM_KEY_LEN), rng, rng.bytes(SYM_KEY_LEN))

    @property
    def public_key(self) -> bytes:
        return self.keys.pk

    @property
    def registered(self) -> Dict[str, bytes]:
        return dict(self._by_id)

    @property
    def enrolled(self) -> Dict[str, bytes]:
        return dict(self._enrolled)

    def enroll(self, provider_id: str, public_key: bytes) -> None:
        """Record the signing key an identity check tied to ``provider_id``.

        Only enrolled keys can obtain an authentication secret. Enrolling the
        same key twice is a no-op; a different key for a known id is refused.
        """
        if not provider_id or len(provider_id) > 256:
            raise CertInvalid("provider id must be 1..256 characters")
        if len(public_key) != 32:
            raise CertInvalid(f"signing key must be 32 bytes, got {len(public_key)}")
        with self._lock:
            known = self._enrolled.get(provider_id)
            if known is not None and known != public_key:
                raise AlreadyRegistered(f"provider {provider_id} is enrolled with a different key")
            self._enrolled[provider_id] = public_key
        logger.info("auditor enrolled provider=%s", provider_id)

    def enroll_cert(self, cert: ProviderCert) -> None:
        verify_cert(cert)
        self.enroll(cert.provider_id, cert.public_key)

    def issue_auth_secret(self, cert: ProviderCert) -> bytes:
        verify_cert(cert)
        with self._lock:
            enrolled = self._enrolled.get(cert.provider_id)
            if enrolled is None:
                raise CertInvalid(f"provider {cert.provider_id} is not enrolled with the auditor")
            if enrolled != cert.public_key:
                raise CertInvalid(f"certificate key for {cert.provider_id} is not the enrolled key")
            if cert.provider_id in self._by_id:
                raise AlreadyRegistered(f"provider {cert.provider_id} is already registered")
            secret = self.rng.bytes(AUTH_SECRET_LEN)
            while secret in self._secrets:
                secret = self.rng.bytes(AUTH_SECRET_LEN)
            self._secrets[secret] = cert.provider_id
            self._by_id[cert.provider_id] = secret
        logger.info("auditor registered provider=%s total=%d", cert.provider_id, len(self._by_id))
        return secret

    def resolve_identity(self, chall: AuthChallenge) -> str:
        for secret, pid in list(self._secrets.items()):
            if challenge_digest(chall.nonce, secret) == chall.challenge:
                return pid
        raise Unresolvable("challenge matches no registered provider")

    def sign_secsla(self, provider_id: str, chall: AuthChallenge, tokens: Sequence[bytes]) -> bytes:
        """Sign a provider's encrypted token list bound to its anonymous challenge."""
        secret = self._by_id.get(provider_id)
        if secret is None:
            raise Unresolvable(f"provider {provider_id} is not registered")
        if challenge_digest(chall.nonce, secret) != chall.challenge:
            raise Unresolvable(f"challenge was not made with {provider_id}'s secret")
        if not tokens:
            raise ValueError("refusing to sign an empty token list")
        return sign(self.keys, secsla_canonical(chall.challenge, tokens))

    def handle(self, frame: Frame) -> Frame:
        if frame.type != FrameType.RESOLVE_REQUEST:
            raise WireError(f"auditor does not serve {frame.type.name}")
        body = parse_json(frame)
        try:
            chall = AuthChallenge.from_dict(body)
            tag = bytes.fromhex(body.get("tag") or "")
        except (KeyError, TypeError, ValueError, AttributeError) as e:
            raise WireError(f"malformed RESOLVE_REQUEST: {e}") from e
        if not mac_verify(self.resolve_key, _RESOLVE_DOMAIN + chall.nonce + chall.challenge, tag):
            logger.warning("auditor refused unauthenticated resolve challenge=%s", chall.anonymous_id[:12])
            raise AccessDenied("resolve request is not authenticated by the broker key")
        pid = self.resolve_identity(chall)
        logger.info("auditor resolved challenge=%s", chall.anonymous_id[:12])
        return json_frame(FrameType.RESOLVE_RESULT, {"provider_id": pid})

    # ---------- persistence ----------

    def to_state(self) -> dict:
        return {
            "signing_key": self.keys.private_bytes().hex(),
            "k_val": self.k_val.hex(),
            "resolve_key": self.resolve_key.hex(),
            "enrolled": {pid: pk.hex() for pid, pk in self._enrolled.items()},
            "registry": {pid: s.hex() for pid, s in self._by_id.items()},
        }

    @classmethod
    def from_state(cls, state: dict, rng: Optional[Rng] = None) -> "Auditor":
        a = cls(
            SigKeyPair.from_private_bytes(bytes.fromhex(state["signing_key"])),
            bytes.fromhex(state["k_val"]),
            rng,
            bytes.fromhex(state["resolve_key"]),
        )
        for pid, pk in state.get("enrolled", {}).items():
            a._enrolled[pid] = bytes.fromhex(pk)
        for pid, s in state.get("registry", {}).items():
            secret = bytes.fromhex(s)
            a._secrets[secret] = pid
            a._by_id[pid] = secret
        return a
