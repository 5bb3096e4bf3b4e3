"""Two-party computation: garbling, oblivious transfer and the keyword search session."""

from .cut_and_choose import CutAndChoosePack, cac_open, cac_prepare, cac_verify, choose_reveal_set
from .garbling import (
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
from .ot import ot_batch, ot_receive, ot_receiver_choose, ot_sender_respond, ot_sender_setup
from .qese import (
    MatchList,
    QeseBroker,
    QeseProvider,
    broker_run_keyword,
    provider_begin_keyword,
    qese_match_provider,
    search_index,
)

__all__ = [
    "CutAndChoosePack",
    "GarbledCircuit",
    "InputEncoding",
    "MatchList",
    "OutputDecoding",
    "QeseBroker",
    "QeseProvider",
    "broker_run_keyword",
    "cac_open",
    "cac_prepare",
    "cac_verify",
    "choose_reveal_set",
    "decode_output",
    "deserialize_garbled",
    "encode_input",
    "evaluate_garbled",
    "garble",
    "ot_batch",
    "ot_receive",
    "ot_receiver_choose",
    "ot_sender_respond",
    "ot_sender_setup",
    "provider_begin_keyword",
    "qese_match_provider",
    "search_index",
    "serialize_garbled",
]
