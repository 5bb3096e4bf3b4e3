"""Provider agent: tokenizes and encrypts its secSLA, registers anonymously,
and answers keyword sessions."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import List, Optional

from qres.anonet.auditor import AuthChallenge, ProviderCert, make_challenge, make_provider_cert
from qres.anonet.relay import Relay, local_endpoint, rendezvous_keys
from qres.circuits.qese import BASIC
from qres.crypto.prims import SigKeyPair, enc_token, keygen_sym, sign_keygen
from qres.crypto.rng import Rng, default_rng
from qres.errors import ConfigError
from qres.models import RegisterSecSla
from qres.mpc.qese import DEFAULT_SESSION_TIMEOUT_S, QeseProvider
from qres.net.wire import FrameType, json_frame, parse_json, raise_for_error
from qres.secsla.document import SecSlaDocument
from qres.secsla.tokens import Token, tokenize_offering
from qres.utils import get_logger, read_json, write_json

logger = get_logger(__name__)


def encrypt_tokens(key: bytes, tokens: List[Token]) -> List[bytes]:
    return [enc_token(key, t.raw) for t in tokens]


# ---------- key files ----------

@dataclass(frozen=True)
class ProviderKeys:
    provider_id: str
    key: bytes
    signing: SigKeyPair

    def to_dict(self) -> dict:
        return {
            "provider_id": self.provider_id,
            "sym_key": self.key.hex(),
            "signing_key": self.signing.private_bytes().hex(),
            "cert": make_provider_cert(self.provider_id, self.signing).to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProviderKeys":
        try:
            return cls(
                d["provider_id"],
                bytes.fromhex(d["sym_key"]),
                SigKeyPair.from_private_bytes(bytes.fromhex(d["signing_key"])),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"provider key file is malformed: {e}") from e


def provider_keygen(provider_id: str, path: str, rng: Optional[Rng] = None) -> ProviderKeys:
    if os.path.exists(path):
        raise ConfigError(f"Provider key file already exists: {path}")
    rng = rng or default_rng()
    keys = ProviderKeys(provider_id, keygen_sym(rng), sign_keygen(rng))
    write_json(path, keys.to_dict())
    return keys


def load_provider_keys(path: str) -> ProviderKeys:
    if not os.path.exists(path):
        raise ConfigError(f"Provider key file not found: {path}")
    return ProviderKeys.from_dict(read_json(path))


def registration_secret(registration: dict) -> bytes:
    try:
        return bytes.fromhex(registration["auth_secret"])
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"registration file is malformed: {e}") from e


@dataclass
class ProviderAgent:
    provider_id: str
    document: SecSlaDocument
    key: bytes
    signing: SigKeyPair
    secret: Optional[bytes] = None
    k_val: Optional[bytes] = None
    challenge: Optional[AuthChallenge] = None
    qese: Optional[QeseProvider] = field(default=None, repr=False)

    @classmethod
    def create(cls, provider_id: str, document: SecSlaDocument, rng: Rng) -> "ProviderAgent":
        return cls(provider_id, document, keygen_sym(rng), sign_keygen(rng))

    @property
    def cert(self) -> ProviderCert:
        return make_provider_cert(self.provider_id, self.signing)

    @property
    def anonymous_id(self) -> Optional[str]:
        return self.challenge.anonymous_id if self.challenge else None

    def tokens(self) -> List[Token]:
        return tokenize_offering(self.document)

    def encrypted_tokens(self) -> List[bytes]:
        return encrypt_tokens(self.key, self.tokens())

    def register(self, auditor, rng: Rng) -> AuthChallenge:
        """Obtain an authentication secret and derive this submission's challenge."""
        self.secret = auditor.issue_auth_secret(self.cert)
        self.k_val = auditor.k_val
        self.challenge = make_challenge(self.secret, rng)
        return self.challenge

    def submission(self, auditor) -> RegisterSecSla:
        if self.challenge is None:
            raise RuntimeError("provider must register before submitting")
        tokens = self.encrypted_tokens()
        signature = auditor.sign_secsla(self.provider_id, self.challenge, tokens)
        return RegisterSecSla(
            nonce=self.challenge.nonce.hex(),
            challenge=self.challenge.challenge.hex(),
            auditor_signature=signature.hex(),
            encrypted_tokens=[t.hex() for t in tokens],
        )

    def start_qese(
        self,
        mode: str = BASIC,
        free_xor: bool = False,
        cut_and_choose_n: int = 0,
        rng: Optional[Rng] = None,
        session_timeout_s: float = DEFAULT_SESSION_TIMEOUT_S,
    ) -> QeseProvider:
        self.qese = QeseProvider(
            self.key,
            mode=mode,
            k_val=self.k_val,
            free_xor=free_xor,
            cut_and_choose_n=cut_and_choose_n,
            rng=rng,
            session_timeout_s=session_timeout_s,
        )
        return self.qese

    @property
    def rendezvous_owner(self) -> SigKeyPair:
        if self.secret is None or self.challenge is None:
            raise RuntimeError("provider must register before owning a rendezvous address")
        return rendezvous_keys(self.secret, self.challenge.nonce)

    def attach_rendezvous(self, entry_relay: Relay) -> None:
        if self.qese is None or self.challenge is None:
            raise RuntimeError("provider needs a QeSe endpoint and a challenge before attaching")
        entry_relay.register_rendezvous(
            self.challenge.rendezvous, local_endpoint(self.qese.handle), self.rendezvous_owner.pk
        )

    def submit(self, route, msg: RegisterSecSla) -> str:
        reply = route.request(json_frame(FrameType.REGISTER_SECSLA, msg.model_dump()))
        aid = parse_json(raise_for_error(reply, FrameType.ACK))["anonymous_id"]
        logger.info("provider submitted tokens=%d", len(msg.encrypted_tokens))
        return aid
