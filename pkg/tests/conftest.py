import os
import sys

import pytest

os.environ.setdefault("LOG_DIR", os.path.join(os.path.dirname(os.path.abspath(__file__)), "_logs"))

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from qres.crypto.prims import enc_token
from qres.crypto.rng import DeterministicRng
from qres.mpc.qese import MatchList, search_index


LISTING_XML = """\
<SLA slaid="sla-listing">
  <service id="S1" name="Cloud storage">
    <control id="S1.1" name="Cryptographic key management" category="encryption">
      <slo id="S1.1.1" name="Key rotation" value="level3"/>
      <slo id="S1.1.2" name="Key length" value="level2"/>
    </control>
  </service>
</SLA>
"""

LISTING_REQUIREMENTS_XML = """\
<requirements>
  <SLA slaid="wanted">
    <service id="S1" name="Cloud storage">
      <control id="S1.1" name="Cryptographic key management" category="encryption">
        <slo id="S1.1.1" name="Key rotation" value="level3"/>
        <slo id="S1.1.2" name="Key length" value="level2"/>
      </control>
    </service>
  </SLA>
  <priorities>
    <priority service="S1" level="HI"/>
  </priorities>
</requirements>
"""


class OracleMatcher:
    """Stands in for the broker's QeSe side with direct knowledge of every provider key.

    Produces the same match lists the garbled sessions would, without the
    circuit work, so large sweeps stay fast.
    """

    def __init__(self, providers):
        self.keys = {tuple(p.encrypted_tokens()): p.key for p in providers}
        self.calls = 0

    def match_provider(self, keywords, channel, tokens):
        self.calls += 1
        key = self.keys[tuple(tokens)]
        return MatchList(hits=[search_index(enc_token(key, kw.raw), tokens) for kw in keywords])


@pytest.fixture
def listing_xml():
    return LISTING_XML


@pytest.fixture
def listing_requirements_xml():
    return LISTING_REQUIREMENTS_XML


@pytest.fixture
def rng():
    return DeterministicRng("tests")
