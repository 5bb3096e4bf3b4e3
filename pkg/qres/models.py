"""Pydantic models for JSON frame payloads and stored records."""

from __future__ import annotations

from datetime import datetime
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator


class BaseModelWithConfig(BaseModel):
    """Base model forbidding silent data loss."""

    model_config = ConfigDict(populate_by_name=True, extra="forbid")


def _hex_list(values: List[str], nbytes: int, what: str) -> List[str]:
    for v in values:
        if len(v) != 2 * nbytes or any(c not in "0123456789abcdef" for c in v):
            raise ValueError(f"{what} entries must be {nbytes}-byte lowercase hex")
    return values


class RegisterSecSla(BaseModelWithConfig):
    """REGISTER_SECSLA: an anonymous, auditor-signed encrypted token list."""

    nonce: str = Field(pattern=r"^[0-9a-f]{32}$")
    challenge: str = Field(pattern=r"^[0-9a-f]{64}$")
    auditor_signature: str = Field(pattern=r"^[0-9a-f]{128}$")
    encrypted_tokens: List[str] = Field(min_length=1)

    @field_validator("encrypted_tokens")
    @classmethod
    def _tokens_hex(cls, v: List[str]) -> List[str]:
        return _hex_list(v, 16, "encrypted_tokens")

    def token_bytes(self) -> List[bytes]:
        return [bytes.fromhex(t) for t in self.encrypted_tokens]


class StoredSecSla(RegisterSecSla):
    """One broker store record; holds no provider identity."""

    anonymous_id: str = Field(pattern=r"^[0-9a-f]{64}$")
    submitted_at: datetime


class SubmitRequirements(BaseModelWithConfig):
    """SUBMIT_REQUIREMENTS: customer keyword tokens and their priority labels."""

    customer_id: str = Field(min_length=1, max_length=128)
    keywords: List[str] = Field(min_length=1)
    labels: List[Literal["HI", "LI", "NR"]]
    scheme: Optional[Literal["boolean", "prioritized"]] = None
    resolve_top: bool = False

    @field_validator("keywords")
    @classmethod
    def _keywords_hex(cls, v: List[str]) -> List[str]:
        return _hex_list(v, 8, "keywords")

    @field_validator("labels")
    @classmethod
    def _one_label_per_keyword(cls, v, info):
        kws = info.data.get("keywords")
        if kws is not None and len(v) != len(kws):
            raise ValueError("labels must match keywords one to one")
        return v


class RankingRecord(BaseModelWithConfig):
    anonymous_id: str
    score_numerator: int
    score_denominator: int = Field(ge=1)
    hits_per_keyword: List[bool] = Field(default_factory=list)


class RankingResultDoc(BaseModelWithConfig):
    """RANKING_RESULT payload and the customer's saved ranking file."""

    scheme: Literal["boolean", "prioritized"]
    ranking: List[RankingRecord] = Field(default_factory=list)
    excluded: List[str] = Field(default_factory=list)
    resolved_provider: Optional[str] = None
