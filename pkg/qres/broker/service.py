"""Broker orchestration: store signed submissions, run keyword sessions
against every stored provider, rank, and optionally resolve the winner."""

from __future__ import annotations

import threading
import time
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Mapping, Optional, Tuple

from pydantic import ValidationError

from qres.anonet.auditor import AuthChallenge, resolve_request, verify_secsla
from qres.broker.store import SecSlaStore
from qres.errors import (
    NoProviders,
    ProviderUnreachable,
    QresError,
    QueryThrottled,
    SignatureInvalid,
    WireError,
)
from qres.models import RankingRecord, RankingResultDoc, RegisterSecSla, StoredSecSla, SubmitRequirements
from qres.mpc.qese import MatchList, QeseBroker
from qres.net.wire import Frame, FrameType, json_frame, parse_json, raise_for_error
from qres.ranking import PRIORITIZED, SCHEMES, RankingResult, rank
from qres.secsla.tokens import Token
from qres.utils import get_logger, now_utc, redact_key_material

logger = get_logger(__name__)

# record -> frame channel to that provider (for example a reverse onion route)
Connector = Callable[[StoredSecSla], object]


@dataclass
class SearchOutcome:
    result: RankingResult
    resolved_provider: Optional[str] = None

    def to_doc(self) -> RankingResultDoc:
        doc = self.result.to_document()
        return RankingResultDoc(
            scheme=doc["scheme"],
            ranking=[RankingRecord(**r) for r in doc["ranking"]],
            excluded=doc["excluded"],
            resolved_provider=self.resolved_provider,
        )


class BrokerService:
    def __init__(
        self,
        store: SecSlaStore,
        auditor_public_key: bytes,
        qese: QeseBroker,
        connect: Connector,
        weights: Mapping[str, Fraction],
        scheme: str = PRIORITIZED,
        min_query_interval_s: float = 0.0,
        max_workers: int = 8,
        auditor_channel=None,
        resolve_key: Optional[bytes] = None,
        clock: Callable[[], float] = time.monotonic,
    ):
        if scheme not in SCHEMES:
            raise ValueError(f"unknown ranking scheme {scheme!r}")
        self.store = store
        self.auditor_public_key = auditor_public_key
        self.qese = qese
        self.connect = connect
        self.weights = dict(weights)
        self.scheme = scheme
        self.min_query_interval_s = min_query_interval_s
        self.max_workers = max(1, max_workers)
        self.auditor_channel = auditor_channel
        self.resolve_key = resolve_key
        self.clock = clock
        self._last_query: Dict[str, float] = {}
        self._throttle_lock = threading.Lock()
        self._provider_locks: Dict[str, threading.Lock] = defaultdict(threading.Lock)
        self._locks_lock = threading.Lock()

    # ---------- submissions ----------

    def register(self, msg: RegisterSecSla) -> str:
        tokens = msg.token_bytes()
        challenge = bytes.fromhex(msg.challenge)
        if not verify_secsla(self.auditor_public_key, challenge, tokens, bytes.fromhex(msg.auditor_signature)):
            raise SignatureInvalid("auditor signature over the encrypted token list does not verify")
        record = StoredSecSla(**msg.model_dump(), anonymous_id=msg.challenge, submitted_at=now_utc())
        self.store.put(record)
        return record.anonymous_id

    # ---------- searches ----------

    def _throttle(self, customer_id: str) -> None:
        if self.min_query_interval_s <= 0:
            return
        with self._throttle_lock:
            now = self.clock()
            last = self._last_query.get(customer_id)
            if last is not None and now - last < self.min_query_interval_s:
                raise QueryThrottled(customer_id, self.min_query_interval_s - (now - last))
            self._last_query[customer_id] = now

    def _provider_lock(self, anonymous_id: str) -> threading.Lock:
        with self._locks_lock:
            return self._provider_locks[anonymous_id]

    def _match_one(self, record: StoredSecSla, keywords: List[Token]) -> MatchList:
        # keyword sessions for one provider never interleave
        with self._provider_lock(record.anonymous_id):
            channel = self.connect(record)
            try:
                return self.qese.match_provider(keywords, channel, record.token_bytes())
            finally:
                close = getattr(channel, "close", None)
                if close:
                    close()

    def _load_records(self) -> Tuple[Dict[str, StoredSecSla], List[str]]:
        ids = self.store.list()
        if not ids:
            raise NoProviders("the broker holds no provider secSLAs")
        records, excluded = {}, []
        for aid in ids:
            try:
                records[aid] = self.store.get(aid)
            except QresError as e:
                logger.warning("broker record skipped id=%s code=%s", aid[:12], e.code)
                excluded.append(aid)
        return records, excluded

    def submit_requirements(self, req: SubmitRequirements) -> SearchOutcome:
        """Search every stored provider for the customer's keywords and rank them."""
        self._throttle(req.customer_id)
        t0 = time.monotonic()
        scheme = req.scheme or self.scheme
        keywords = [Token(bytes.fromhex(k)) for k in req.keywords]
        records, excluded = self._load_records()

        matchlists: Dict[str, MatchList] = {}
        with ThreadPoolExecutor(max_workers=min(self.max_workers, len(records) or 1)) as pool:
            futures = {aid: pool.submit(self._match_one, rec, keywords) for aid, rec in records.items()}
            for aid, fut in futures.items():
                try:
                    matchlists[aid] = fut.result()
                except (QresError, OSError) as e:
                    err = ProviderUnreachable(aid, f"{getattr(e, 'code', 'os_error')}: {e}")
                    logger.warning("broker provider excluded id=%s reason=%s", aid[:12], redact_key_material(err.reason))
                    excluded.append(aid)
        if not matchlists:
            raise NoProviders(f"none of the {len(records)} stored providers could be searched")

        slot_counts = {aid: len(records[aid].encrypted_tokens) for aid in matchlists}
        result = rank(scheme, matchlists, slot_counts, req.labels, self.weights, excluded)
        resolved = None
        if req.resolve_top and result.top is not None:
            resolved = self.resolve(records[result.top.anonymous_id])
        logger.info(
            "broker search done customer=%s scheme=%s keywords=%d providers=%d excluded=%d took_ms=%d",
            req.customer_id, scheme, len(keywords), len(matchlists), len(excluded),
            int((time.monotonic() - t0) * 1000),
        )
        return SearchOutcome(result, resolved)

    def resolve(self, record: StoredSecSla) -> Optional[str]:
        if self.auditor_channel is None or self.resolve_key is None:
            logger.warning("broker resolve skipped: no auditor channel or resolve key configured")
            return None
        chall = AuthChallenge(bytes.fromhex(record.nonce), bytes.fromhex(record.challenge))
        reply = self.auditor_channel.request(resolve_request(self.resolve_key, chall))
        body = parse_json(raise_for_error(reply, FrameType.RESOLVE_RESULT))
        return body.get("provider_id")

    # ---------- wire ----------

    def handle(self, frame: Frame) -> Frame:
        try:
            if frame.type == FrameType.REGISTER_SECSLA:
                aid = self.register(RegisterSecSla.model_validate(parse_json(frame)))
                return json_frame(FrameType.ACK, {"anonymous_id": aid})
            if frame.type == FrameType.SUBMIT_REQUIREMENTS:
                outcome = self.submit_requirements(SubmitRequirements.model_validate(parse_json(frame)))
                return Frame(FrameType.RANKING_RESULT, outcome.to_doc().model_dump_json().encode("utf-8"))
        except ValidationError as e:
            raise WireError(f"{frame.type.name} payload rejected: {e.errors()[0]['msg']}") from e
        raise WireError(f"broker does not serve {frame.type.name}")


def handle_submit_requirements(service: BrokerService, req: SubmitRequirements) -> SearchOutcome:
    return service.submit_requirements(req)
