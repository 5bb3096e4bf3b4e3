"""Per-keyword secure search session between a provider and the broker.

The provider garbles a fresh encryption circuit for every keyword with its
key as garbler input; the broker fetches the labels of its keyword bits by
oblivious transfer, evaluates, and ends up with ``Enc(k, w)`` and nothing
else. In Validated mode the broker also feeds a MAC tag over the keyword and
the circuit outputs the all-zero block when the tag is wrong.

Exchange (broker requests, provider replies)::

    GARBLED_CIRCUIT  ->  GARBLED_CIRCUIT  mode | n | n x (commit | len | gc) [| labels | decoding]
    CAC_OPEN         ->  CAC_OPENING      (n - 1) x (index | seed | nonce) | labels | decoding
    OT_SENDER        ->  OT_SENDER        A_1 .. A_m
    OT_RECEIVER      ->  OT_PAYLOAD       H(nonce | B_1..B_m) | m x (slot0 | slot1)
    KEYWORD_DONE     ->  ACK
"""

from __future__ import annotations

import struct
import threading
import time
from dataclasses import dataclass, field
from hashlib import sha256
from typing import Callable, List, Optional, Sequence

from qres.circuits.circuit import bits_to_bytes, bytes_to_bits
from qres.circuits.qese import BASIC, BOTTOM, MODES, VALIDATED, build_qese_circuit
from qres.config.constants import DIGEST_LEN, LABEL_LEN, NONCE_LEN, SYM_KEY_LEN
from qres.crypto.prims import mac_tag, pad16
from qres.crypto.rng import Rng, default_rng
from qres.crypto.sha256 import hmac_midstates
from qres.errors import (
    CorruptTable,
    KeywordFailure,
    OtFailure,
    ProtocolError,
    QresError,
    SessionInProgress,
    ValidationRejected,
    WireError,
)
from qres.mpc.cut_and_choose import (
    COMMIT_NONCE_LEN,
    SEED_LEN,
    CacOpening,
    CacOpenings,
    CutAndChoosePack,
    cac_open,
    cac_prepare,
    cac_verify,
    choose_reveal_set,
)
from qres.mpc.garbling import (
    GarbledCircuit,
    InputEncoding,
    OutputDecoding,
    decode_output,
    deserialize_garbled,
    encode_input,
    evaluate_garbled,
    garble,
    serialize_garbled,
)
from qres.mpc.ot import (
    PAYLOAD_LEN,
    OtSenderState,
    concat_elements,
    ot_receive,
    ot_receiver_choose,
    ot_sender_respond,
    ot_sender_setup,
    split_elements,
)
from qres.net.wire import Frame, FrameType, Reader, error_frame, raise_for_error
from qres.secsla.tokens import Token
from qres.utils import get_logger

logger = get_logger(__name__)

SESSION_LEN = 16
DEFAULT_SESSION_TIMEOUT_S = 30.0
_MODE_BYTE = {BASIC: 0, VALIDATED: 1}
_MODE_OF = {v: k for k, v in _MODE_BYTE.items()}


def choice_commitment(nonce: bytes, receiver_msgs: Sequence[bytes]) -> bytes:
    return sha256(nonce + concat_elements(receiver_msgs)).digest()


# ---------- provider ----------

@dataclass
class _ProviderSession:
    garbled: Optional[GarbledCircuit] = None
    encoding: Optional[InputEncoding] = None
    pack: Optional[CutAndChoosePack] = None
    ot_states: Optional[List[OtSenderState]] = None
    ot_pairs: Optional[list] = None
    opened: float = 0.0
    last_active: float = 0.0


class QeseProvider:
    """Provider (garbler) side. One keyword session at a time."""

    def __init__(
        self,
        key: bytes,
        mode: str = BASIC,
        k_val: Optional[bytes] = None,
        free_xor: bool = False,
        cut_and_choose_n: int = 0,
        rng: Optional[Rng] = None,
        resource_dir: Optional[str] = None,
        session_timeout_s: float = DEFAULT_SESSION_TIMEOUT_S,
        clock: Callable[[], float] = time.monotonic,
    ):
        if len(key) != SYM_KEY_LEN:
            raise ValueError(f"provider key must be {SYM_KEY_LEN} bytes")
        if mode not in MODES:
            raise ValueError(f"unknown QeSe mode {mode!r}")
        if mode == VALIDATED and not k_val:
            raise ValueError("Validated mode needs the marketplace validation key")
        self.mode = mode
        self.free_xor = free_xor
        self.cut_and_choose_n = cut_and_choose_n if cut_and_choose_n >= 2 else 0
        self.rng = rng or default_rng()
        self.circuit = build_qese_circuit(mode, resource_dir)
        garbler_input = key
        if mode == VALIDATED:
            inner, outer = hmac_midstates(k_val)
            garbler_input = key + inner + outer
        self._garbler_bits = bytes_to_bits(garbler_input)
        self.session_timeout_s = session_timeout_s
        self._clock = clock
        self._session: Optional[_ProviderSession] = None
        self._lock = threading.Lock()
        self.sessions_served = 0
        self.sessions_expired = 0

    @property
    def busy(self) -> bool:
        return self._session is not None

    # -- protocol steps --

    def begin_keyword(self) -> Frame:
        """Garble a fresh circuit for the next keyword.

        Refused while another session is open, unless that one has been idle
        past ``session_timeout_s``; a stale session is dropped.
        """
        now = self._clock()
        if self._session is not None:
            age = now - self._session.last_active
            if age < self.session_timeout_s:
                raise SessionInProgress("previous keyword session is still open")
            logger.warning("qese provider dropping stale session age_s=%.1f", age)
            self._session = None
            self.sessions_expired += 1
        head = bytes([_MODE_BYTE[self.mode]])
        if self.cut_and_choose_n:
            pack = cac_prepare(self.circuit, self._garbler_bits, self.cut_and_choose_n, self.rng, self.free_xor)
            body = [struct.pack(">H", pack.n)]
            for gc, commitment in pack.published():
                blob = serialize_garbled(gc)
                body.append(commitment + struct.pack(">I", len(blob)) + blob)
            self._session = _ProviderSession(pack=pack, opened=now, last_active=now)
            return Frame(FrameType.GARBLED_CIRCUIT, head + b"".join(body))

        gc, enc, dec = garble(self.circuit, self.rng, free_xor=self.free_xor)
        blob = serialize_garbled(gc)
        labels = b"".join(encode_input(enc, self._garbler_bits))
        self._session = _ProviderSession(garbled=gc, encoding=enc, opened=now, last_active=now)
        payload = head + struct.pack(">H", 1) + bytes(DIGEST_LEN) + struct.pack(">I", len(blob)) + blob
        return Frame(FrameType.GARBLED_CIRCUIT, payload + labels + dec.to_bytes())

    def _open(self, payload: bytes) -> Frame:
        s = self._require_session()
        if s.pack is None or s.garbled is not None:
            raise ProtocolError("no cut-and-choose pack awaiting an opening")
        r = Reader(payload, "CAC_OPEN")
        reveal = [r.u16() for _ in range(len(payload) // 2)]
        r.done()
        openings = cac_open(s.pack, reveal)
        keep = s.pack.unopened(reveal)
        gc, labels, enc, dec = s.pack.evaluation_material(keep)
        s.garbled, s.encoding = gc, enc
        body = b"".join(struct.pack(">H", o.index) + o.seed + o.nonce for o in openings.openings)
        return Frame(FrameType.CAC_OPENING, body + b"".join(labels) + dec.to_bytes())

    def _ot_sender(self, payload: bytes) -> Frame:
        s = self._active(payload)
        pairs = s.encoding.release_evaluator_pairs()
        setups = [ot_sender_setup(self.rng) for _ in pairs]
        s.ot_states = [st for st, _ in setups]
        s.ot_pairs = pairs
        return Frame(FrameType.OT_SENDER, concat_elements([A for _, A in setups]))

    def _ot_receiver(self, payload: bytes) -> Frame:
        s = self._active(payload[:SESSION_LEN])
        if s.ot_states is None:
            raise ProtocolError("OT_RECEIVER before OT_SENDER")
        r = Reader(payload[SESSION_LEN:], "OT_RECEIVER")
        nonce = r.take(NONCE_LEN)
        msgs = split_elements(r.rest(), len(s.ot_states))
        body = [choice_commitment(nonce, msgs)]
        for i, (state, B, (m0, m1)) in enumerate(zip(s.ot_states, msgs, s.ot_pairs)):
            body.append(ot_sender_respond(state, B, m0, m1, i))
        s.ot_states = None
        return Frame(FrameType.OT_PAYLOAD, b"".join(body))

    def _done(self, payload: bytes) -> Frame:
        s = self._active(payload)
        self._session = None
        self.sessions_served += 1
        logger.debug("qese provider keyword closed took_ms=%d", int((self._clock() - s.opened) * 1000))
        return Frame(FrameType.ACK)

    def _require_session(self) -> _ProviderSession:
        if self._session is None:
            raise ProtocolError("no keyword session is open")
        self._session.last_active = self._clock()
        return self._session

    def _active(self, session_id: bytes) -> _ProviderSession:
        s = self._require_session()
        if s.garbled is None or s.garbled.session_id != session_id:
            raise ProtocolError("frame does not belong to the open keyword session")
        return s

    def handle(self, frame: Frame) -> Frame:
        with self._lock:
            try:
                if frame.type == FrameType.GARBLED_CIRCUIT:
                    return self.begin_keyword()
                if frame.type == FrameType.CAC_OPEN:
                    return self._open(frame.payload)
                if frame.type == FrameType.OT_SENDER:
                    return self._ot_sender(frame.payload)
                if frame.type == FrameType.OT_RECEIVER:
                    return self._ot_receiver(frame.payload)
                if frame.type == FrameType.KEYWORD_DONE:
                    return self._done(frame.payload)
                if frame.type == FrameType.SESSION_ABORT:
                    self._session = None
                    return Frame(FrameType.ACK)
                raise WireError(f"provider does not serve {frame.type.name}")
            except QresError as e:
                if not isinstance(e, SessionInProgress):
                    self._session = None
                logger.warning("qese provider abort type=%s code=%s", frame.type.name, e.code)
                return error_frame(e, FrameType.SESSION_ABORT)


def provider_begin_keyword(provider: QeseProvider) -> Frame:
    return provider.begin_keyword()


# ---------- broker ----------

@dataclass
class MatchList:
    """Per keyword: the matched position in the provider's token list, or None."""

    hits: List[Optional[int]]
    rejected: List[int] = field(default_factory=list)

    @property
    def hit_flags(self) -> List[bool]:
        return [h is not None for h in self.hits]

    @property
    def hit_count(self) -> int:
        return sum(self.hit_flags)

    @property
    def indices(self) -> List[int]:
        return [h for h in self.hits if h is not None]


def search_index(c_w: bytes, tokens: Sequence[bytes]) -> Optional[int]:
    for i, t in enumerate(tokens):
        if t == c_w:
            return i
    return None


class QeseBroker:
    """Broker (evaluator) side."""

    def __init__(
        self,
        mode: str = BASIC,
        k_val: Optional[bytes] = None,
        rng: Optional[Rng] = None,
        min_cut_and_choose_n: int = 0,
        resource_dir: Optional[str] = None,
    ):
        if mode == VALIDATED and not k_val:
            raise ValueError("Validated mode needs the marketplace validation key")
        if min_cut_and_choose_n == 1 or min_cut_and_choose_n < 0:
            raise ValueError("min_cut_and_choose_n is 0 (off) or at least 2")
        self.mode = mode
        self.k_val = k_val
        self.rng = rng or default_rng()
        # 0: single circuit accepted; otherwise the provider must commit to at least this many
        self.min_cut_and_choose_n = min_cut_and_choose_n
        self.circuit = build_qese_circuit(mode, resource_dir)

    def _receive_circuit(self, reply: Frame, channel):
        c = self.circuit
        r = Reader(reply.payload, "GARBLED_CIRCUIT")
        mode = _MODE_OF.get(r.u8())
        if mode != self.mode:
            raise ProtocolError(f"provider garbled a {mode} circuit, broker runs {self.mode}")
        n = r.u16()
        if n == 0:
            raise WireError("GARBLED_CIRCUIT carries no circuit")
        if n < self.min_cut_and_choose_n:
            raise ProtocolError(
                f"provider committed to {n} circuit(s), broker requires at least {self.min_cut_and_choose_n}"
            )
        published, commitments = [], []
        for _ in range(n):
            commitments.append(r.take(DIGEST_LEN))
            published.append(deserialize_garbled(r.take(r.u32()), c))
        gw = c.input_widths[0]

        if n == 1:
            labels = [r.take(LABEL_LEN) for _ in range(gw)]
            dec = OutputDecoding.from_bytes(r.rest(), c.n_outputs)
            return published[0], labels, dec

        reveal = choose_reveal_set(n, self.rng)
        opening = raise_for_error(
            channel.request(Frame(FrameType.CAC_OPEN, b"".join(struct.pack(">H", i) for i in reveal))),
            FrameType.CAC_OPENING,
        )
        r = Reader(opening.payload, "CAC_OPENING")
        openings = []
        for _ in range(n - 1):
            openings.append(CacOpening(r.u16(), r.take(SEED_LEN), r.take(COMMIT_NONCE_LEN)))
        if sorted(o.index for o in openings) != reveal:
            raise ProtocolError("provider opened a different set of circuits")
        if not cac_verify(CacOpenings(c, published[0].free_xor, published, commitments, openings)):
            raise CorruptTable("cut-and-choose check failed: an opened circuit was built incorrectly")
        keep = next(i for i in range(n) if i not in reveal)
        labels = [r.take(LABEL_LEN) for _ in range(gw)]
        dec = OutputDecoding.from_bytes(r.rest(), c.n_outputs)
        return published[keep], labels, dec

    def run_keyword(self, keyword: Token, channel, tag: Optional[bytes] = None) -> bytes:
        """Obtain ``Enc(k, keyword)`` from one fresh garbled circuit."""
        t0 = time.monotonic()
        session = None
        closed = False
        try:
            # a lost reply may still have opened a session at the provider
            reply = raise_for_error(channel.request(Frame(FrameType.GARBLED_CIRCUIT)), FrameType.GARBLED_CIRCUIT)
            gc, garbler_labels, dec = self._receive_circuit(reply, channel)
            session = gc.session_id
            evaluator_input = pad16(keyword.raw)
            if self.mode == VALIDATED:
                evaluator_input += tag if tag is not None else mac_tag(self.k_val, keyword.raw)
            bits = bytes_to_bits(evaluator_input)

            sender = raise_for_error(channel.request(Frame(FrameType.OT_SENDER, session)), FrameType.OT_SENDER)
            A_values = split_elements(sender.payload, len(bits))
            choices = [ot_receiver_choose(b, A, self.rng) for b, A in zip(bits, A_values)]
            nonce = self.rng.bytes(NONCE_LEN)
            B_values = [B for _, B in choices]
            expected = choice_commitment(nonce, B_values)
            ot_reply = raise_for_error(
                channel.request(Frame(FrameType.OT_RECEIVER, session + nonce + concat_elements(B_values))),
                FrameType.OT_PAYLOAD,
            )
            r = Reader(ot_reply.payload, "OT_PAYLOAD")
            if r.take(DIGEST_LEN) != expected:
                raise OtFailure("provider answered different OT choice messages")
            labels = [ot_receive(st, r.take(PAYLOAD_LEN), i) for i, (st, _) in enumerate(choices)]
            r.done()

            out = evaluate_garbled(gc, list(garbler_labels) + labels)
            block = bits_to_bytes(decode_output(dec, out))
            raise_for_error(channel.request(Frame(FrameType.KEYWORD_DONE, session)), FrameType.ACK)
            closed = True
        except SessionInProgress:
            # the open session is not ours
            closed = True
            raise
        finally:
            if not closed:
                _abort_quietly(channel)
        if self.mode == VALIDATED and block == BOTTOM:
            raise ValidationRejected("validation circuit returned the rejection block")
        logger.debug("qese broker keyword done took_ms=%d", int((time.monotonic() - t0) * 1000))
        return block

    def match_provider(self, keywords: Sequence[Token], channel, tokens: Sequence[bytes]) -> MatchList:
        """One fresh session per keyword, then search the provider's stored tokens."""
        hits: List[Optional[int]] = []
        rejected: List[int] = []
        for idx, kw in enumerate(keywords):
            try:
                c_w = self.run_keyword(kw, channel)
            except ValidationRejected:
                hits.append(None)
                rejected.append(idx)
                continue
            except (QresError, OSError) as e:
                raise KeywordFailure(idx, e) from e
            hits.append(search_index(c_w, tokens))
        return MatchList(hits=hits, rejected=rejected)


def _abort_quietly(channel) -> None:
    try:
        channel.request(Frame(FrameType.SESSION_ABORT))
    except Exception:
        pass


def broker_run_keyword(broker: QeseBroker, keyword: Token, channel) -> bytes:
    return broker.run_keyword(keyword, channel)


def qese_match_provider(broker: QeseBroker, keywords: Sequence[Token], channel, tokens: Sequence[bytes]) -> MatchList:
    return broker.match_provider(keywords, channel, tokens)
