import hashlib
import os
import sys

import pytest

os.environ.setdefault("LOG_DIR", os.path.join(os.path.dirname(os.path.abspath(__file__)), "_logs"))

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from qres.errors import (
    DuplicateId,
    EmptySubstring,
    MalformedXml,
    MissingPriority,
    MissingValue,
    SchemaViolation,
    TemplateMismatch,
)
from qres.secsla import (
    check_template,
    derive_token,
    extract_slo_substrings,
    load_secsla,
    parse_requirements,
    parse_secsla,
    requirements_xml,
    serialize_secsla,
    tokenize_offering,
    tokenize_requirements,
)


def _with_values(xml: str, first: str, second: str) -> str:
    return xml.replace('value="level3"', f'value="{first}"').replace('value="level2"', f'value="{second}"')


class TestDocument:
    def test_listing_structure(self, listing_xml):
        doc = parse_secsla(listing_xml)
        assert doc.sla_id == "sla-listing"
        assert [s.id for s in doc.services] == ["S1"]
        control = doc.services[0].children[0]
        assert control.id == "S1.1"
        assert control.category == "encryption"
        assert [(n.id, n.value) for n in control.children] == [("S1.1.1", "level3"), ("S1.1.2", "level2")]

    def test_listing_prefields(self, listing_xml):
        doc = load_secsla(listing_xml)
        assert {n.id: n.prefield for n in doc.walk()} == {"S1": 1, "S1.1": 2, "S1.1.1": 3, "S1.1.2": 4}

    def test_single_service_prefield(self):
        doc = load_secsla('<SLA slaid="x"><service id="S1" name="only"/></SLA>')
        assert [n.prefield for n in doc.walk()] == [1]

    def test_chain_of_five(self):
        xml = (
            '<SLA slaid="x"><service id="a" name="a"><control id="b" name="b">'
            '<control id="c" name="c"><control id="d" name="d">'
            '<slo id="e" name="e" value="v"/></control></control></control></service></SLA>'
        )
        doc = load_secsla(xml)
        assert [(n.id, n.prefield) for n in doc.walk()] == [("a", 1), ("b", 2), ("c", 3), ("d", 4), ("e", 5)]

    def test_prefields_follow_open_tag_order_across_services(self):
        xml = (
            '<SLA slaid="x">'
            '<service id="S1" name="s1"><slo id="A" name="a" value="v"/></service>'
            '<service id="S2" name="s2"><control id="C" name="c"><slo id="B" name="b" value="v"/></control></service>'
            "</SLA>"
        )
        assert load_secsla(xml).layout() == {"A": 2, "B": 5}

    def test_input_pre_attributes_are_ignored(self, listing_xml):
        doc = load_secsla(listing_xml.replace('id="S1.1.1"', 'id="S1.1.1" pre="99"'))
        assert doc.layout()["S1.1.1"] == 3

    def test_serialized_document_reloads_with_same_layout(self, listing_xml):
        doc = load_secsla(listing_xml)
        text = serialize_secsla(doc)
        assert 'pre="3"' in text
        assert load_secsla(text).layout() == doc.layout()

    def test_malformed_xml(self):
        with pytest.raises(MalformedXml):
            parse_secsla("<SLA slaid='x'><service id='S1' name='s'>")

    def test_wrong_root(self):
        with pytest.raises(SchemaViolation):
            parse_secsla('<contract slaid="x"><service id="S1" name="s"/></contract>')

    def test_slo_without_value_attribute(self):
        with pytest.raises(SchemaViolation):
            parse_secsla('<SLA slaid="x"><service id="S1" name="s"><slo id="a" name="a"/></service></SLA>')

    def test_slo_directly_under_root_is_rejected(self):
        with pytest.raises(SchemaViolation):
            parse_secsla('<SLA slaid="x"><slo id="a" name="a" value="v"/></SLA>')

    def test_duplicate_ids(self):
        xml = (
            '<SLA slaid="x"><service id="S1" name="s">'
            '<slo id="a" name="a" value="v"/><slo id="a" name="b" value="w"/></service></SLA>'
        )
        with pytest.raises(DuplicateId):
            parse_secsla(xml)

    def test_no_services(self):
        with pytest.raises(SchemaViolation):
            parse_secsla('<SLA slaid="x"></SLA>')


class TestOfferingTokens:
    def test_listing_substrings(self, listing_xml):
        assert extract_slo_substrings(load_secsla(listing_xml)) == ["level3||3", "level2||4"]

    def test_token_is_truncated_sha256(self):
        token = derive_token("level3||3")
        assert token.raw == hashlib.sha256(b"level3||3").digest()[:8]
        assert len(token.hex()) == 16

    def test_known_tokens(self):
        assert derive_token("level3||3").hex() == "6b0e3c36430c5f13"
        assert derive_token("level3||4").hex() == "7c44e58792e4abb8"

    def test_prefield_changes_the_token(self):
        assert derive_token("level3||3") != derive_token("level3||4")

    def test_empty_substring(self):
        with pytest.raises(EmptySubstring):
            derive_token("")

    def test_tokenize_offering(self, listing_xml):
        tokens = tokenize_offering(load_secsla(listing_xml))
        assert [t.raw for t in tokens] == [
            hashlib.sha256(b"level3||3").digest()[:8],
            hashlib.sha256(b"level2||4").digest()[:8],
        ]

    def test_offering_with_empty_value(self, listing_xml):
        doc = load_secsla(listing_xml.replace('value="level2"', 'value=""'))
        with pytest.raises(MissingValue):
            tokenize_offering(doc)


class TestRequirements:
    def test_listing_layout_with_high_priority(self, listing_xml):
        doc = load_secsla(listing_xml)
        reqs = tokenize_requirements(doc, {"S1": "HI"})
        assert len(reqs.keywords) == 2
        assert reqs.labels == ["HI", "HI"]
        assert reqs.keywords == tokenize_offering(doc)

    def test_different_level_does_not_match(self, listing_xml):
        provider = tokenize_offering(load_secsla(listing_xml))
        customer = tokenize_requirements(load_secsla(_with_values(listing_xml, "level1", "level2")), {"S1": "LI"})
        assert customer.keywords[0] != provider[0]
        assert customer.keywords[1] == provider[1]

    def test_comma_alternatives_become_separate_keywords(self, listing_xml):
        doc = load_secsla(_with_values(listing_xml, "level1, level3", "level2"))
        reqs = tokenize_requirements(doc, {"S1": "HI"})
        assert [k.source for k in reqs.keywords] == ["level1||3", "level3||3", "level2||4"]
        assert reqs.slo_ids == ["S1.1.1", "S1.1.1", "S1.1.2"]

    def test_empty_values_carry_no_requirement(self, listing_xml):
        doc = load_secsla(_with_values(listing_xml, "", "level2"))
        reqs = tokenize_requirements(doc, {"S1": "NR"})
        assert [k.source for k in reqs.keywords] == ["level2||4"]

    def test_nothing_required(self, listing_xml):
        with pytest.raises(EmptySubstring):
            tokenize_requirements(load_secsla(_with_values(listing_xml, "", "")), {"S1": "HI"})

    def test_missing_priority(self, listing_xml):
        with pytest.raises(MissingPriority):
            tokenize_requirements(load_secsla(listing_xml), {"S2": "HI"})

    def test_unknown_priority_label(self, listing_xml):
        with pytest.raises(SchemaViolation):
            tokenize_requirements(load_secsla(listing_xml), {"S1": "URGENT"})

    def test_template_mismatch(self, listing_xml):
        template = load_secsla(listing_xml)
        shifted = load_secsla(
            listing_xml.replace(
                '<slo id="S1.1.1"', '<control id="S1.2" name="extra"/><slo id="S1.1.1"'
            )
        )
        with pytest.raises(TemplateMismatch):
            check_template(shifted, template)
        with pytest.raises(TemplateMismatch):
            tokenize_requirements(shifted, {"S1": "HI"}, template)

    def test_template_match(self, listing_xml):
        template = load_secsla(_with_values(listing_xml, "", ""))
        check_template(load_secsla(listing_xml), template)

    def test_parse_requirements_file(self, listing_requirements_xml):
        doc, priorities = parse_requirements(listing_requirements_xml)
        assert priorities == {"S1": "HI"}
        assert doc.layout() == {"S1.1.1": 3, "S1.1.2": 4}

    def test_requirements_xml_is_parseable(self, listing_xml):
        doc = load_secsla(listing_xml)
        parsed, priorities = parse_requirements(requirements_xml(doc, {"S1": "LI"}))
        assert priorities == {"S1": "LI"}
        assert extract_slo_substrings(parsed) == extract_slo_substrings(doc)

    def test_requirements_without_sla(self):
        with pytest.raises(SchemaViolation):
            parse_requirements("<requirements><priorities/></requirements>")

    def test_requirements_bad_child(self, listing_requirements_xml):
        with pytest.raises(SchemaViolation):
            parse_requirements(listing_requirements_xml.replace("<priorities>", "<notes/><priorities>"))
