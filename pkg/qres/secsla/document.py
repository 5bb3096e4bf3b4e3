"""secSLA XML documents: parsing, pre-field numbering, serialization."""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional

from qres.errors import DuplicateId, MalformedXml, SchemaViolation

ROOT_TAG = "sla"
NODE_KINDS = ("service", "control", "slo")
# element kind -> kinds admissible as children
_CHILDREN = {
    ROOT_TAG: ("service",),
    "service": ("control", "slo"),
    "control": ("control", "slo"),
    "slo": (),
}


@dataclass
class SlaNode:
    kind: str
    id: str
    name: str
    category: Optional[str] = None
    value: Optional[str] = None
    prefield: int = 0
    children: List["SlaNode"] = field(default_factory=list)

    @property
    def is_slo(self) -> bool:
        return self.kind == "slo"


@dataclass
class SecSlaDocument:
    sla_id: str
    services: List[SlaNode]

    def walk(self) -> Iterator[SlaNode]:
        """Nodes in document (open-tag) order."""
        stack = list(reversed(self.services))
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def slos(self) -> List[SlaNode]:
        return [n for n in self.walk() if n.is_slo]

    def service_of(self) -> Dict[str, str]:
        """Map every node id to the id of its top-level service."""
        out: Dict[str, str] = {}
        for svc in self.services:
            stack = [svc]
            while stack:
                node = stack.pop()
                out[node.id] = svc.id
                stack.extend(node.children)
        return out

    def layout(self) -> Dict[str, int]:
        """SLO id -> pre-field; used for template compatibility checks."""
        return {n.id: n.prefield for n in self.slos()}


def tag_name(el: ET.Element) -> str:
    return el.tag.split("}")[-1].strip().lower()


def attributes(el: ET.Element) -> Dict[str, str]:
    return {k.lower(): v.strip() for k, v in el.attrib.items()}


def _require(attrs: Dict[str, str], key: str, where: str) -> str:
    if key not in attrs:
        raise SchemaViolation(f"<{where}> is missing attribute '{key}'")
    return attrs[key]


def _build(el: ET.Element, parent_kind: str, seen: set) -> SlaNode:
    kind = tag_name(el)
    if kind not in _CHILDREN[parent_kind]:
        raise SchemaViolation(f"unexpected element <{el.tag}> inside <{parent_kind}>")
    attrs = attributes(el)
    node_id = _require(attrs, "id", kind)
    if not node_id:
        raise SchemaViolation(f"<{kind}> has an empty id")
    if node_id in seen:
        raise DuplicateId(f"duplicate node id {node_id!r}")
    seen.add(node_id)
    node = SlaNode(
        kind=kind,
        id=node_id,
        name=_require(attrs, "name", kind),
        category=attrs.get("category"),
        value=_require(attrs, "value", kind) if kind == "slo" else None,
    )
    for child in el:
        node.children.append(_build(child, kind, seen))
    return node


def document_from_element(root: ET.Element) -> SecSlaDocument:
    if tag_name(root) != ROOT_TAG:
        raise SchemaViolation(f"root element must be <SLA>, got <{root.tag}>")
    sla_id = _require(attributes(root), "slaid", "SLA")
    seen: set = set()
    services = [_build(child, ROOT_TAG, seen) for child in root]
    if not services:
        raise SchemaViolation("secSLA has no services")
    return SecSlaDocument(sla_id=sla_id, services=services)


def parse_xml(xml_text: str) -> ET.Element:
    try:
        return ET.fromstring(xml_text)
    except ET.ParseError as e:
        raise MalformedXml(f"secSLA is not well-formed XML: {e}") from e


def parse_secsla(xml_text: str) -> SecSlaDocument:
    """Parse a secSLA; any ``pre`` attributes in the input are ignored."""
    return document_from_element(parse_xml(xml_text))


def compute_prefields(doc: SecSlaDocument) -> SecSlaDocument:
    """Number every open tag below the root, starting at 1."""
    for ordinal, node in enumerate(doc.walk(), start=1):
        node.prefield = ordinal
    return doc


def load_secsla(xml_text: str) -> SecSlaDocument:
    return compute_prefields(parse_secsla(xml_text))


def _to_element(node: SlaNode) -> ET.Element:
    attrs = {"id": node.id, "name": node.name}
    if node.category is not None:
        attrs["category"] = node.category
    if node.value is not None:
        attrs["value"] = node.value
    if node.prefield:
        attrs["pre"] = str(node.prefield)
    el = ET.Element(node.kind, attrs)
    for child in node.children:
        el.append(_to_element(child))
    return el


def secsla_element(doc: SecSlaDocument) -> ET.Element:
    root = ET.Element("SLA", {"slaid": doc.sla_id})
    for svc in doc.services:
        root.append(_to_element(svc))
    return root


def serialize_secsla(doc: SecSlaDocument) -> str:
    root = secsla_element(doc)
    ET.indent(root)
    return ET.tostring(root, encoding="unicode")
