"""Configuration constants for the QRES marketplace."""

# Byte sizes fixed by the protocol
TOKEN_LEN = 8
BLOCK_LEN = 16
SYM_KEY_LEN = 16
NONCE_LEN = 16
DIGEST_LEN = 32
LABEL_LEN = 16
GROUP_ELEMENT_LEN = 32
SIGNATURE_LEN = 64
ADDRESS_LEN = 16

# Wire protocol version carried in every frame header
WIRE_VERSION = 1
# Serialized garbled-circuit message version
GC_VERSION = 1

SUBSTRING_SEPARATOR = "||"
PRIORITY_LABELS = ("HI", "LI", "NR")

# Scenario generator service levels (yearly, half-yearly, monthly, weekly)
SERVICE_LEVELS = ("level1", "level2", "level3", "level4")

# Default configuration values
DEFAULT_CONFIG = {
    "broker": {
        "listen": "127.0.0.1:7400",
        "store_path": "data/store",
        "scheme": "prioritized",
        "resolve_top": False,
        "min_query_interval_s": 0.0,
        "max_workers": 8,
    },
    "qese": {
        "mode": "Basic",
        "free_xor": False,
        "cut_and_choose": False,
        "cut_and_choose_n": 10,
        "session_timeout_s": 30.0,
    },
    "ranking": {
        "weights": {"HI": "1", "LI": "1/2", "NR": "0"},
    },
    "relays": {
        "in_process": True,
        "nodes": [],
    },
    "auditor": {
        "address": "127.0.0.1:7410",
        "state_path": "data/auditor.json",
    },
    "bench": {
        "reps": 5,
    },
}
