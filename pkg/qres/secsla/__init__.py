"""secSLA documents and their tokenization."""

from .document import (
    SecSlaDocument,
    SlaNode,
    compute_prefields,
    load_secsla,
    parse_secsla,
    serialize_secsla,
)
from .tokens import (
    RequirementSet,
    Token,
    check_template,
    derive_token,
    extract_slo_substrings,
    parse_requirements,
    requirements_xml,
    tokenize_offering,
    tokenize_requirements,
)

__all__ = [
    "RequirementSet",
    "SecSlaDocument",
    "SlaNode",
    "Token",
    "check_template",
    "compute_prefields",
    "derive_token",
    "extract_slo_substrings",
    "load_secsla",
    "parse_requirements",
    "parse_secsla",
    "requirements_xml",
    "serialize_secsla",
    "tokenize_offering",
    "tokenize_requirements",
]
