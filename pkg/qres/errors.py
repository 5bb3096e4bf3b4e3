"""Exception hierarchy for the QRES marketplace.

Every error carries a stable ``code`` used by the CLI's machine-parsable
error line and exit-code mapping.
"""

from __future__ import annotations

from typing import Optional


class QresError(Exception):
    code = "qres_error"
    exit_code = 1


# ---------- secSLA model ----------

class SecSlaError(QresError, ValueError):
    code = "secsla_error"
    exit_code = 3


class MalformedXml(SecSlaError):
    code = "malformed_xml"


class SchemaViolation(SecSlaError):
    code = "schema_violation"


class DuplicateId(SecSlaError):
    code = "duplicate_id"


class MissingValue(SecSlaError):
    code = "missing_value"


class EmptySubstring(SecSlaError):
    code = "empty_substring"


class TemplateMismatch(SecSlaError):
    code = "template_mismatch"


class MissingPriority(SecSlaError):
    code = "missing_priority"


# ---------- crypto ----------

class CryptoError(QresError):
    code = "crypto_error"
    exit_code = 4


class RngFailure(CryptoError):
    code = "rng_failure"


class BadTokenLength(CryptoError, ValueError):
    code = "bad_token_length"


class BadPadding(CryptoError, ValueError):
    code = "bad_padding"


class InvalidGroupElement(CryptoError, ValueError):
    code = "invalid_group_element"


# ---------- circuits & garbling ----------

class CircuitError(QresError, ValueError):
    code = "circuit_error"
    exit_code = 4


class FormatError(CircuitError):
    code = "format_error"


class NonTopological(CircuitError):
    code = "non_topological"


class UnsupportedGateKind(CircuitError):
    code = "unsupported_gate_kind"


class WidthMismatch(CircuitError):
    code = "width_mismatch"


class ResourceMissing(CircuitError):
    code = "resource_missing"


class CorruptTable(CircuitError):
    code = "corrupt_table"


class EncodingConsumed(CircuitError):
    code = "encoding_consumed"


class BadIndexSet(CircuitError):
    code = "bad_index_set"


# ---------- OT / QeSe ----------

class ProtocolError(QresError):
    code = "protocol_error"
    exit_code = 5


class LengthMismatch(ProtocolError, ValueError):
    code = "length_mismatch"


class OtFailure(ProtocolError):
    code = "ot_failure"


class SessionInProgress(ProtocolError):
    code = "session_in_progress"


class ValidationRejected(ProtocolError):
    code = "validation_rejected"


class KeywordFailure(ProtocolError):
    """A single keyword session failed; ``keyword_index`` locates it."""

    code = "keyword_failure"

    def __init__(self, keyword_index: int, cause: Exception):
        super().__init__(f"keyword {keyword_index}: {cause}")
        self.keyword_index = keyword_index
        self.cause = cause


# ---------- ranking ----------

class RankingError(QresError, ValueError):
    code = "ranking_error"
    exit_code = 3


class RaggedRows(RankingError):
    code = "ragged_rows"


class EmptyInput(RankingError):
    code = "empty_input"


# ---------- anonymity layer ----------

class AnonError(QresError):
    code = "anon_error"
    exit_code = 6


class CertInvalid(AnonError):
    code = "cert_invalid"


class AlreadyRegistered(AnonError):
    code = "already_registered"


class Unresolvable(AnonError):
    code = "unresolvable"


class PeelFailure(AnonError):
    code = "peel_failure"


class SignatureInvalid(AnonError):
    code = "signature_invalid"


class NoRoute(AnonError):
    code = "no_route"


class AccessDenied(AnonError):
    code = "access_denied"


# ---------- broker, store & wire ----------

class BrokerError(QresError):
    code = "broker_error"
    exit_code = 7


class NotFound(BrokerError):
    code = "not_found"


class Corrupt(BrokerError):
    code = "corrupt"


class NoProviders(BrokerError):
    code = "no_providers"


class ProviderUnreachable(BrokerError):
    code = "provider_unreachable"

    def __init__(self, anonymous_id: str, reason: str):
        super().__init__(f"provider {anonymous_id[:12]}… unreachable: {reason}")
        self.anonymous_id = anonymous_id
        self.reason = reason


class QueryThrottled(BrokerError):
    code = "query_throttled"

    def __init__(self, customer_id: str, retry_after: float):
        super().__init__(f"customer {customer_id} must wait {retry_after:.1f}s before the next query")
        self.customer_id = customer_id
        self.retry_after = retry_after


class WireError(QresError, ValueError):
    code = "wire_error"
    exit_code = 5


class Truncated(WireError):
    code = "truncated"


class UnknownType(WireError):
    code = "unknown_type"


class VersionMismatch(WireError):
    code = "version_mismatch"


class ConfigError(QresError, ValueError):
    code = "config_error"
    exit_code = 2


def error_line(exc: BaseException, message: Optional[str] = None) -> str:
    """Render the single machine-parsable line the CLI prints on failure."""
    code = getattr(exc, "code", "internal")
    text = (message or str(exc) or exc.__class__.__name__).replace("\n", " ")
    return f"error code={code} msg={text}"


def _all_subclasses(cls):
    for sub in cls.__subclasses__():
        yield sub
        yield from _all_subclasses(sub)


def from_code(code: str, message: str) -> QresError:
    """Rebuild an error received in an ERROR frame."""
    for cls in _all_subclasses(QresError):
        if cls.code == code and "__init__" not in cls.__dict__:
            return cls(message)
    exc = QresError(message)
    exc.code = code
    return exc
