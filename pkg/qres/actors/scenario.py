"""Seeded marketplace scenarios and an in-process marketplace to run them.

A scenario fixes the number of providers, SLOs per secSLA, service levels per
SLO, customer keywords and the customer's priority profile. Generation is a
pure function of the seed. ``run_scenario`` wires a complete marketplace in
one process (auditor, three relays, broker with a file store, providers
serving keyword sessions behind rendezvous addresses) and performs the
customer's searches; ``plaintext_rank`` is the brute-force reference ranker
over the same plaintext inputs.
"""

from __future__ import annotations

import copy
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from qres.actors.customer import CustomerClient, ranking_from_doc
from qres.actors.provider import ProviderAgent
from qres.anonet.auditor import Auditor
from qres.anonet.relay import (
    BROKER_ADDRESS,
    OnionRoute,
    RelayNetwork,
    build_relays,
    forward_hops,
    local_endpoint,
    reverse_hops,
)
from qres.broker.service import BrokerService
from qres.broker.store import FileStore
from qres.circuits.qese import VALIDATED
from qres.config.constants import DEFAULT_CONFIG, PRIORITY_LABELS, SERVICE_LEVELS
from qres.crypto.rng import DeterministicRng
from qres.models import StoredSecSla
from qres.mpc.qese import QeseBroker
from qres.net.transport import LocalEndpoint
from qres.ranking import BOOLEAN, PRIORITIZED, SCHEMES, RankingEntry, RankingResult
from qres.secsla.document import SecSlaDocument, SlaNode, compute_prefields
from qres.secsla.tokens import extract_slo_substrings, substring
from qres.settings import weights_from_config
from qres.utils import get_logger

logger = get_logger(__name__)

RELAY_NAMES = ("N1", "N2", "N3")
WEIGHT_PROFILES = ("mixed", "high", "none")
MAX_SERVICES = 3


@dataclass(frozen=True)
class Scenario:
    providers: int
    slos: int
    keywords: int
    levels: int = 4
    weight_profile: str = "mixed"
    seed: int = 0

    def __post_init__(self):
        for name in ("providers", "slos", "keywords", "levels"):
            if getattr(self, name) < 1:
                raise ValueError(f"scenario {name} must be >= 1, got {getattr(self, name)}")
        if self.weight_profile not in WEIGHT_PROFILES:
            raise ValueError(f"weight profile must be one of {WEIGHT_PROFILES}, got {self.weight_profile!r}")


@dataclass
class ScenarioData:
    scenario: Scenario
    template: SecSlaDocument
    offerings: List[Tuple[str, SecSlaDocument]]
    requirements: SecSlaDocument
    priorities: Dict[str, str]


def level_names(levels: int) -> List[str]:
    if levels <= len(SERVICE_LEVELS):
        return list(SERVICE_LEVELS[:levels])
    return [f"level{i + 1}" for i in range(levels)]


def _template(sla_id: str, slos: int) -> SecSlaDocument:
    n_services = min(MAX_SERVICES, slos)
    services = []
    for s in range(n_services):
        control = SlaNode("control", f"C{s + 1}", f"Control {s + 1}", category="security")
        services.append(SlaNode("service", f"S{s + 1}", f"Service {s + 1}", children=[control]))
    for j in range(slos):
        control = services[j % n_services].children[0]
        control.children.append(SlaNode("slo", f"SLO{j + 1}", f"SLO {j + 1}", value=""))
    return compute_prefields(SecSlaDocument(sla_id, services))


def _with_values(template: SecSlaDocument, sla_id: str, values: Mapping[str, str]) -> SecSlaDocument:
    doc = copy.deepcopy(template)
    doc.sla_id = sla_id
    for slo in doc.slos():
        slo.value = values.get(slo.id, "")
    return doc


def _priorities(template: SecSlaDocument, profile: str) -> Dict[str, str]:
    if profile == "high":
        return {svc.id: "HI" for svc in template.services}
    if profile == "none":
        return {svc.id: "NR" for svc in template.services}
    return {svc.id: PRIORITY_LABELS[i % len(PRIORITY_LABELS)] for i, svc in enumerate(template.services)}


def generate_scenario(scenario: Scenario) -> ScenarioData:
    """Template, one offering per provider and the customer's selections, all from the seed."""
    rng = DeterministicRng(f"scenario:{scenario.seed}")
    levels = level_names(scenario.levels)
    template = _template("template", scenario.slos)
    slo_ids = [slo.id for slo in template.slos()]

    offerings = []
    for p in range(scenario.providers):
        values = {sid: levels[rng.randbelow(len(levels))] for sid in slo_ids}
        offerings.append((f"provider-{p + 1:03d}", _with_values(template, f"offer-{p + 1:03d}", values)))

    # (slo, level) selections; beyond every distinct pair, selections repeat
    pairs = [(s, lv) for s in range(len(slo_ids)) for lv in range(len(levels))]
    chosen = rng.sample(pairs, min(scenario.keywords, len(pairs)))
    while len(chosen) < scenario.keywords:
        chosen.append(pairs[rng.randbelow(len(pairs))])
    by_slo: Dict[str, List[int]] = {}
    for s, lv in chosen:
        by_slo.setdefault(slo_ids[s], []).append(lv)
    wanted = {sid: ",".join(levels[lv] for lv in sorted(lvs)) for sid, lvs in by_slo.items()}
    requirements = _with_values(template, "requirements", wanted)
    return ScenarioData(scenario, template, offerings, requirements, _priorities(template, scenario.weight_profile))


def customer_substrings(doc: SecSlaDocument, priorities: Mapping[str, str]) -> List[Tuple[str, str]]:
    """Plaintext (substring, label) per keyword in the order the customer tokenizes them."""
    owner = doc.service_of()
    out = []
    for slo in doc.slos():
        for value in [v.strip() for v in (slo.value or "").split(",") if v.strip()]:
            out.append((substring(value, slo.prefield), priorities[owner[slo.id]]))
    return out


def plaintext_rank(
    data: ScenarioData,
    provider_ids: Sequence[str],
    scheme: str,
    weights: Mapping[str, Fraction],
) -> RankingResult:
    """Brute-force matcher and ranker on plaintext substrings.

    ``provider_ids`` names the offerings in ``data.offerings`` order.
    """
    keywords = customer_substrings(data.requirements, data.priorities)
    offered = {pid: extract_slo_substrings(doc) for pid, (_, doc) in zip(provider_ids, data.offerings)}
    hits: Dict[str, List[Optional[int]]] = {}
    for pid, subs in offered.items():
        hits[pid] = [subs.index(kw) if kw in subs else None for kw, _ in keywords]

    entries = []
    for pid in offered:
        flags = [h is not None for h in hits[pid]]
        if scheme == BOOLEAN:
            score = Fraction(sum(flags))
        elif scheme == PRIORITIZED:
            score = Fraction(0)
            for w, (_, label) in enumerate(keywords):
                mine = hits[pid][w]
                if mine is None:
                    continue
                sharing = sum(1 for other in offered if hits[other][w] == mine)
                score += Fraction(weights[label]) / sharing
        else:
            raise ValueError(f"unknown ranking scheme {scheme!r}")
        entries.append(RankingEntry(pid, score, flags))
    entries.sort(key=lambda e: (-e.score, e.anonymous_id))
    return RankingResult(scheme, entries, [])


class Marketplace:
    """Every party of the marketplace inside one process."""

    def __init__(self, cfg: Optional[Dict[str, Any]] = None, store_path: Optional[str] = None, seed: Any = 0):
        self.cfg = cfg or copy.deepcopy(DEFAULT_CONFIG)
        self.rng = DeterministicRng(f"marketplace:{seed}")
        qcfg = self.cfg["qese"]
        bcfg = self.cfg["broker"]
        self.mode = qcfg["mode"]
        self.free_xor = bool(qcfg["free_xor"])
        self.cac_n = int(qcfg["cut_and_choose_n"]) if qcfg["cut_and_choose"] else 0

        self.auditor = Auditor.generate(self.rng.fork("auditor"))
        self.network = RelayNetwork()
        self.relays = build_relays(RELAY_NAMES, self.network, self.rng.fork("relays"))
        self.store = FileStore(store_path or tempfile.mkdtemp(prefix="qres-store-"))
        self._route_rng = self.rng.fork("routes")
        qese = QeseBroker(
            self.mode,
            k_val=self.auditor.k_val if self.mode == VALIDATED else None,
            rng=self.rng.fork("broker"),
            min_cut_and_choose_n=self.cac_n,
        )
        self.broker = BrokerService(
            self.store,
            self.auditor.public_key,
            qese,
            self.connect,
            weights_from_config(self.cfg),
            scheme=bcfg["scheme"],
            min_query_interval_s=float(bcfg["min_query_interval_s"]),
            max_workers=int(bcfg["max_workers"]),
            auditor_channel=LocalEndpoint(self.auditor.handle),
            resolve_key=self.auditor.resolve_key,
        )
        self.network.register(BROKER_ADDRESS, local_endpoint(self.broker.handle))
        self.providers: List[ProviderAgent] = []

    @property
    def entry_relay(self):
        return self.relays[0]

    def connect(self, record: StoredSecSla) -> OnionRoute:
        """Reverse route to a provider, addressed by its rendezvous value only."""
        rendezvous = bytes.fromhex(record.challenge)[:16]
        return OnionRoute(reverse_hops(self.relays), rendezvous, self.network, self._route_rng)

    def add_provider(self, provider_id: str, document: SecSlaDocument) -> ProviderAgent:
        prng = self.rng.fork(f"provider:{provider_id}")
        agent = ProviderAgent.create(provider_id, document, prng)
        self.auditor.enroll(provider_id, agent.signing.pk)
        agent.register(self.auditor, prng)
        agent.start_qese(
            self.mode,
            free_xor=self.free_xor,
            cut_and_choose_n=self.cac_n,
            rng=prng,
            session_timeout_s=float(self.cfg["qese"]["session_timeout_s"]),
        )
        agent.attach_rendezvous(self.entry_relay)
        route = OnionRoute(forward_hops(self.relays), BROKER_ADDRESS, self.network, prng)
        agent.submit(route, agent.submission(self.auditor))
        self.providers.append(agent)
        return agent

    def customer(self, customer_id: str) -> CustomerClient:
        return CustomerClient(customer_id, LocalEndpoint(self.broker.handle))


@dataclass
class ScenarioRun:
    data: ScenarioData
    marketplace: Marketplace
    rankings: Dict[str, RankingResult] = field(default_factory=dict)
    resolved: Dict[str, Optional[str]] = field(default_factory=dict)

    @property
    def anonymous_ids(self) -> List[str]:
        return [p.anonymous_id for p in self.marketplace.providers]

    def search(self, scheme: str, resolve_top: bool = False) -> RankingResult:
        data = self.data
        customer = self.marketplace.customer(f"customer-{data.scenario.seed}-{scheme}-{len(self.rankings)}")
        doc = customer.search(data.requirements, data.priorities, scheme=scheme, resolve_top=resolve_top,
                              template=data.template)
        result = ranking_from_doc(doc)
        self.rankings[scheme] = result
        self.resolved[scheme] = doc.resolved_provider
        return result


def build_scenario(
    scenario: Scenario,
    cfg: Optional[Dict[str, Any]] = None,
    store_path: Optional[str] = None,
) -> ScenarioRun:
    data = generate_scenario(scenario)
    market = Marketplace(cfg, store_path, seed=scenario.seed)
    for provider_id, doc in data.offerings:
        market.add_provider(provider_id, doc)
    logger.info(
        "scenario ready seed=%d providers=%d slos=%d keywords=%d",
        scenario.seed, scenario.providers, scenario.slos, scenario.keywords,
    )
    return ScenarioRun(data, market)


def run_scenario(
    scenario: Scenario,
    cfg: Optional[Dict[str, Any]] = None,
    store_path: Optional[str] = None,
    schemes: Sequence[str] = SCHEMES,
    resolve_top: bool = False,
) -> ScenarioRun:
    """Build the marketplace for ``scenario`` and run one search per scheme."""
    run = build_scenario(scenario, cfg, store_path)
    for scheme in schemes:
        run.search(scheme, resolve_top=resolve_top)
    return run
