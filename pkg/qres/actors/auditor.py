"""Auditor state on disk and the auditor daemon."""

from __future__ import annotations

import os
import threading
from typing import Any, Dict, Optional

from qres.anonet.auditor import Auditor, AuthChallenge, ProviderCert
from qres.crypto.rng import Rng, default_rng
from qres.errors import ConfigError
from qres.net.transport import serve_tcp
from qres.settings import split_address
from qres.utils import get_logger, read_json, write_json

logger = get_logger(__name__)

_save_lock = threading.Lock()


def load_auditor(path: str, rng: Optional[Rng] = None) -> Auditor:
    if not os.path.exists(path):
        raise ConfigError(f"Auditor state not found: {path} (run 'auditor keygen' first)")
    try:
        return Auditor.from_state(read_json(path), rng)
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"Auditor state {path} is unreadable: {e}") from e


def save_auditor(path: str, auditor: Auditor) -> str:
    with _save_lock:
        return write_json(path, auditor.to_state())


def auditor_keygen(path: str, rng: Optional[Rng] = None, overwrite: bool = False) -> Auditor:
    if os.path.exists(path) and not overwrite:
        raise ConfigError(f"Auditor state already exists: {path}")
    auditor = Auditor.generate(rng or default_rng())
    save_auditor(path, auditor)
    logger.info("auditor keygen state=%s", path)
    return auditor


def broker_material(auditor: Auditor) -> Dict[str, str]:
    """What the broker needs from the auditor: its verification key, the keyword MAC key
    and the key that authenticates resolve requests."""
    return {
        "auditor_public_key": auditor.public_key.hex(),
        "k_val": auditor.k_val.hex(),
        "resolve_key": auditor.resolve_key.hex(),
    }


def enroll_provider(path: str, cert_doc: Dict[str, Any]) -> Dict[str, str]:
    """Record a vetted provider's signing key; registration only accepts enrolled keys."""
    auditor = load_auditor(path)
    cert = ProviderCert.from_dict(cert_doc)
    auditor.enroll_cert(cert)
    save_auditor(path, auditor)
    return {"provider_id": cert.provider_id, "public_key": cert.public_key.hex()}


def register_provider(path: str, cert_doc: Dict[str, Any]) -> Dict[str, str]:
    """Verify a provider certificate, issue its secret and persist the registry."""
    auditor = load_auditor(path)
    cert = ProviderCert.from_dict(cert_doc)
    secret = auditor.issue_auth_secret(cert)
    save_auditor(path, auditor)
    return {
        "provider_id": cert.provider_id,
        "auth_secret": secret.hex(),
        "k_val": auditor.k_val.hex(),
        "auditor_public_key": auditor.public_key.hex(),
    }


def sign_submission(path: str, provider_id: str, submission: Dict[str, Any]) -> Dict[str, Any]:
    auditor = load_auditor(path)
    try:
        chall = AuthChallenge.from_dict(submission)
        tokens = [bytes.fromhex(t) for t in submission["encrypted_tokens"]]
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"submission file is malformed: {e}") from e
    signature = auditor.sign_secsla(provider_id, chall, tokens)
    return {**submission, "auditor_signature": signature.hex()}


def resolve(path: str, nonce_hex: str, challenge_hex: str) -> str:
    auditor = load_auditor(path)
    try:
        chall = AuthChallenge(bytes.fromhex(nonce_hex), bytes.fromhex(challenge_hex))
    except ValueError as e:
        raise ConfigError(f"nonce and challenge must be hex: {e}") from e
    return auditor.resolve_identity(chall)


def serve_auditor(path: str, listen: str):
    """Bind the resolve service; the caller runs ``serve_forever``."""
    auditor = load_auditor(path)
    host, port = split_address(listen)
    return serve_tcp(auditor.handle, host, port)
