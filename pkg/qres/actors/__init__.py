"""Marketplace parties and the harnesses that run them together."""

from .customer import CustomerClient, build_request, ranking_from_doc
from .provider import ProviderAgent, ProviderKeys, encrypt_tokens
from .scenario import (
    Marketplace,
    Scenario,
    ScenarioData,
    ScenarioRun,
    build_scenario,
    generate_scenario,
    plaintext_rank,
    run_scenario,
)

__all__ = [
    "CustomerClient",
    "Marketplace",
    "ProviderAgent",
    "ProviderKeys",
    "Scenario",
    "ScenarioData",
    "ScenarioRun",
    "build_request",
    "build_scenario",
    "encrypt_tokens",
    "generate_scenario",
    "plaintext_rank",
    "ranking_from_doc",
    "run_scenario",
]
