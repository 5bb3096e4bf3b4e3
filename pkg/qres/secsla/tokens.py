"""Tokenization of provider offerings and customer requirements."""

from __future__ import annotations

import hashlib
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

from qres.config.constants import PRIORITY_LABELS, SUBSTRING_SEPARATOR, TOKEN_LEN
from qres.errors import EmptySubstring, MissingPriority, MissingValue, SchemaViolation, TemplateMismatch
from qres.secsla.document import (
    SecSlaDocument,
    attributes,
    tag_name,
    compute_prefields,
    document_from_element,
    parse_xml,
    secsla_element,
)


@dataclass(frozen=True)
class Token:
    raw: bytes
    # originating substring; stays with its owner, never serialized
    source: str = field(default="", compare=False, repr=False)

    def __post_init__(self):
        if len(self.raw) != TOKEN_LEN:
            raise ValueError(f"token must be {TOKEN_LEN} bytes, got {len(self.raw)}")

    def hex(self) -> str:
        return self.raw.hex()


@dataclass
class RequirementSet:
    """Customer keywords with the priority label inherited from their service."""

    keywords: List[Token]
    labels: List[str]
    priorities: Dict[str, str]
    slo_ids: List[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.keywords:
            raise EmptySubstring("requirement set has no keywords")
        if len(self.labels) != len(self.keywords):
            raise ValueError("one priority label per keyword is required")


def substring(value: str, prefield: int) -> str:
    return f"{value}{SUBSTRING_SEPARATOR}{prefield}"


def extract_slo_substrings(doc: SecSlaDocument) -> List[str]:
    out = []
    for slo in doc.slos():
        if not slo.value:
            raise MissingValue(f"SLO {slo.id} has an empty value")
        out.append(substring(slo.value, slo.prefield))
    return out


def derive_token(text: str) -> Token:
    if not text:
        raise EmptySubstring("cannot derive a token from an empty substring")
    return Token(hashlib.sha256(text.encode("utf-8")).digest()[:TOKEN_LEN], source=text)


def tokenize_offering(doc: SecSlaDocument) -> List[Token]:
    return [derive_token(s) for s in extract_slo_substrings(doc)]


def check_template(doc: SecSlaDocument, template: SecSlaDocument) -> None:
    mine, ref = doc.layout(), template.layout()
    if mine.keys() != ref.keys():
        missing = sorted(ref.keys() - mine.keys())
        extra = sorted(mine.keys() - ref.keys())
        raise TemplateMismatch(f"SLO ids differ from template (missing={missing} extra={extra})")
    for slo_id, pre in mine.items():
        if ref[slo_id] != pre:
            raise TemplateMismatch(f"SLO {slo_id} has pre-field {pre}, template has {ref[slo_id]}")


def _alternatives(value: Optional[str]) -> List[str]:
    return [v.strip() for v in (value or "").split(",") if v.strip()]


def tokenize_requirements(
    doc: SecSlaDocument,
    priorities: Mapping[str, str],
    template: Optional[SecSlaDocument] = None,
) -> RequirementSet:
    """Turn a customer's document into keywords.

    SLO values may list several acceptable levels separated by commas; each
    becomes its own keyword. SLOs with an empty value carry no requirement.
    """
    if template is not None:
        check_template(doc, template)
    owner = doc.service_of()
    keywords: List[Token] = []
    labels: List[str] = []
    slo_ids: List[str] = []
    for slo in doc.slos():
        values = _alternatives(slo.value)
        if not values:
            continue
        service_id = owner[slo.id]
        label = priorities.get(service_id)
        if label is None:
            raise MissingPriority(f"no priority given for service {service_id}")
        if label not in PRIORITY_LABELS:
            raise SchemaViolation(f"priority for {service_id} must be one of {PRIORITY_LABELS}, got {label!r}")
        for value in values:
            keywords.append(derive_token(substring(value, slo.prefield)))
            labels.append(label)
            slo_ids.append(slo.id)
    if not keywords:
        raise EmptySubstring("customer document specifies no requirement values")
    return RequirementSet(keywords=keywords, labels=labels, priorities=dict(priorities), slo_ids=slo_ids)


def parse_requirements(xml_text: str) -> Tuple[SecSlaDocument, Dict[str, str]]:
    """Parse a customer file: ``<requirements>`` wrapping one SLA and a priorities section.

    ``<priorities><priority service="S1" level="HI"/></priorities>``
    """
    root = parse_xml(xml_text)
    if tag_name(root) != "requirements":
        raise SchemaViolation(f"requirements root must be <requirements>, got <{root.tag}>")
    sla_el = None
    priorities: Dict[str, str] = {}
    for child in root:
        kind = tag_name(child)
        if kind == "sla":
            if sla_el is not None:
                raise SchemaViolation("requirements file holds more than one <SLA>")
            sla_el = child
        elif kind == "priorities":
            for p in child:
                if tag_name(p) != "priority":
                    raise SchemaViolation(f"unexpected element <{p.tag}> inside <priorities>")
                attrs = attributes(p)
                if "service" not in attrs or "level" not in attrs:
                    raise SchemaViolation("<priority> needs 'service' and 'level' attributes")
                priorities[attrs["service"]] = attrs["level"].upper()
        else:
            raise SchemaViolation(f"unexpected element <{child.tag}> inside <requirements>")
    if sla_el is None:
        raise SchemaViolation("requirements file has no <SLA>")
    return compute_prefields(document_from_element(sla_el)), priorities


def requirements_xml(doc: SecSlaDocument, priorities: Mapping[str, str]) -> str:
    root = ET.Element("requirements")
    root.append(secsla_element(doc))
    prio = ET.SubElement(root, "priorities")
    for service_id, level in priorities.items():
        ET.SubElement(prio, "priority", {"service": service_id, "level": level})
    ET.indent(root)
    return ET.tostring(root, encoding="unicode")
