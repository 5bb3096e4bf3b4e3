"""Configuration loading: YAML file, JSON-schema validation, env overrides."""

from __future__ import annotations

import copy
import os
from fractions import Fraction
from typing import Any, Dict, Optional

import yaml

from qres.config.constants import DEFAULT_CONFIG
from qres.errors import ConfigError
from qres.utils import get_logger, load_file, validate_config

logger = get_logger(__name__)


def _parse_env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        logger.warning("Invalid integer for %s=%s, using default %d", name, raw, default)
        return default


def _parse_env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError:
        logger.warning("Invalid float for %s=%s, using default %.2f", name, raw, default)
        return default


def _parse_env_bool(name: str, default: bool) -> bool:
    raw = os.getenv(name)
    if raw is None:
        return default
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    logger.warning("Invalid boolean for %s=%s, using default %s", name, raw, default)
    return default


def _parse_env_choice(name: str, default: str, choices: tuple) -> str:
    raw = os.getenv(name)
    if raw is None:
        return default
    if raw in choices:
        return raw
    logger.warning("Invalid value for %s=%s (expected one of %s), using default %s", name, raw, "/".join(choices), default)
    return default


def _merge(base: Dict[str, Any], extra: Dict[str, Any]) -> Dict[str, Any]:
    out = copy.deepcopy(base)
    for key, value in (extra or {}).items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def _apply_env(cfg: Dict[str, Any]) -> None:
    broker = cfg["broker"]
    qese = cfg["qese"]
    listen = os.getenv("QRES_LISTEN")
    if listen:
        if ":" in listen and listen.rsplit(":", 1)[1].isdigit():
            broker["listen"] = listen
        else:
            logger.warning("Invalid address for QRES_LISTEN=%s, using %s", listen, broker["listen"])
    store_path = os.getenv("QRES_STORE_PATH")
    if store_path:
        broker["store_path"] = store_path
    broker["scheme"] = _parse_env_choice("QRES_SCHEME", broker["scheme"], ("boolean", "prioritized"))
    broker["min_query_interval_s"] = max(0.0, _parse_env_float("QRES_MIN_QUERY_INTERVAL", broker["min_query_interval_s"]))
    qese["mode"] = _parse_env_choice("QRES_MODE", qese["mode"], ("Basic", "Validated"))
    qese["free_xor"] = _parse_env_bool("QRES_FREE_XOR", qese["free_xor"])
    qese["cut_and_choose"] = _parse_env_bool("QRES_CUT_AND_CHOOSE", qese["cut_and_choose"])
    n = _parse_env_int("QRES_CAC_N", qese["cut_and_choose_n"])
    if n < 2:
        logger.warning("QRES_CAC_N=%d below 2, keeping %d", n, qese["cut_and_choose_n"])
    else:
        qese["cut_and_choose_n"] = n


def load_config(path: Optional[str] = None) -> Dict[str, Any]:
    """Load the effective configuration.

    The YAML file (optional) is validated against ``config.schema.json``,
    merged over the built-in defaults, and finally overridden by ``QRES_*``
    environment variables.
    """
    file_cfg: Dict[str, Any] = {}
    if path:
        try:
            file_cfg = yaml.safe_load(load_file(path)) or {}
        except FileNotFoundError as e:
            raise ConfigError(f"Config file not found: {path}") from e
        except yaml.YAMLError as e:
            raise ConfigError(f"Config parse error in {path}: {e}") from e
        if not isinstance(file_cfg, dict):
            raise ConfigError(f"Config root must be a mapping: {path}")
        validate_config(file_cfg)

    cfg = _merge(DEFAULT_CONFIG, file_cfg)
    _apply_env(cfg)
    return cfg


def weights_from_config(cfg: Dict[str, Any]) -> Dict[str, Fraction]:
    """Priority-label weights as exact rationals."""
    raw = cfg.get("ranking", {}).get("weights", {})
    out: Dict[str, Fraction] = {}
    for label in ("HI", "LI", "NR"):
        value = raw.get(label, DEFAULT_CONFIG["ranking"]["weights"][label])
        try:
            weight = Fraction(str(value))
        except (ValueError, ZeroDivisionError) as e:
            raise ConfigError(f"Invalid weight for {label}: {value!r}") from e
        if weight < 0:
            raise ConfigError(f"Weight for {label} must be >= 0, got {value!r}")
        out[label] = weight
    return out


def split_address(addr: str) -> tuple:
    host, _, port = addr.rpartition(":")
    if not host or not port.isdigit():
        raise ConfigError(f"Invalid address {addr!r}, expected host:port")
    return host, int(port)
