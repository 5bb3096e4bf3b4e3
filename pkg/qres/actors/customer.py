"""Customer client: tokenizes requirements and asks the broker for a ranking."""

from __future__ import annotations

from typing import Mapping, Optional

from qres.models import RankingResultDoc, SubmitRequirements
from qres.net.wire import FrameType, json_frame, raise_for_error
from qres.ranking import RankingResult
from qres.secsla.document import SecSlaDocument
from qres.secsla.tokens import RequirementSet, tokenize_requirements


def build_request(
    customer_id: str,
    requirements: RequirementSet,
    scheme: Optional[str] = None,
    resolve_top: bool = False,
) -> SubmitRequirements:
    return SubmitRequirements(
        customer_id=customer_id,
        keywords=[k.hex() for k in requirements.keywords],
        labels=list(requirements.labels),
        scheme=scheme,
        resolve_top=resolve_top,
    )


class CustomerClient:
    def __init__(self, customer_id: str, channel):
        self.customer_id = customer_id
        self.channel = channel

    def submit(self, req: SubmitRequirements) -> RankingResultDoc:
        reply = raise_for_error(
            self.channel.request(json_frame(FrameType.SUBMIT_REQUIREMENTS, req.model_dump())),
            FrameType.RANKING_RESULT,
        )
        return RankingResultDoc.model_validate_json(reply.payload)

    def search(
        self,
        document: SecSlaDocument,
        priorities: Mapping[str, str],
        scheme: Optional[str] = None,
        resolve_top: bool = False,
        template: Optional[SecSlaDocument] = None,
    ) -> RankingResultDoc:
        reqs = tokenize_requirements(document, priorities, template)
        return self.submit(build_request(self.customer_id, reqs, scheme, resolve_top))


def ranking_from_doc(doc: RankingResultDoc) -> RankingResult:
    return RankingResult.from_document(doc.model_dump())
