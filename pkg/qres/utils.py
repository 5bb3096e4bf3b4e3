import os
import re
import json
import tempfile
import datetime as dt
import logging
from logging.handlers import TimedRotatingFileHandler
from typing import Optional

from jsonschema import Draft202012Validator
from jsonschema.exceptions import ValidationError

from qres.errors import ConfigError

_SCHEMA_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)), "schemas", "config.schema.json")

# ---------- Time ----------

def now_utc() -> dt.datetime:
    return dt.datetime.now(dt.timezone.utc)

# ---------- Files ----------

def load_file(path: str) -> str:
    with open(path, "r", encoding="utf-8") as f:
        return f.read()

def read_json(path: str):
    return json.loads(load_file(path))

def write_json(path: str, obj) -> str:
    """Write ``obj`` as JSON via a temp file and rename.

    Key and state files end up here, so the file is created 0600.
    """
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".write-", dir=parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            json.dump(obj, f, ensure_ascii=False, indent=2, sort_keys=True)
            f.write("\n")
        os.chmod(tmp, 0o600)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path

# ---------- Config validation ----------

_validator: Optional[Draft202012Validator] = None

def validate_config(cfg: dict) -> None:
    global _validator
    if _validator is None:
        _validator = Draft202012Validator(json.loads(load_file(_SCHEMA_PATH)))
    try:
        _validator.validate(cfg)
    except ValidationError as e:
        where = "/".join(str(p) for p in e.path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {e.message}") from e

# ---------- Logging ----------

_configured = False

class JsonFormatter(logging.Formatter):
    """One JSON object per line; ``component`` is the last segment of the logger name."""

    def format(self, record):
        payload = {
            "ts": dt.datetime.fromtimestamp(record.created, dt.timezone.utc).isoformat().replace("+00:00", "Z"),
            "level": record.levelname,
            "logger": record.name,
            "component": record.name.rsplit(".", 1)[-1],
            "thread": record.threadName,
            "msg": redact_key_material(record.getMessage()),
        }
        if record.exc_info:
            payload["exc_info"] = self.formatException(record.exc_info)
        return json.dumps(payload, ensure_ascii=False)

def _configure_root() -> None:
    global _configured
    if _configured:
        return
    root = logging.getLogger()
    root.setLevel(getattr(logging, os.getenv("LOG_LEVEL", "INFO").upper(), logging.INFO))

    if os.getenv("LOG_JSON", "false").lower() == "true":
        fmt: logging.Formatter = JsonFormatter()
    else:
        fmt = logging.Formatter("%(asctime)s %(levelname)s [%(name)s/%(threadName)s] %(message)s")

    handlers = [logging.StreamHandler()]
    # LOG_DIR="" keeps daemons on stderr only
    log_dir = os.getenv("LOG_DIR", "logs")
    if log_dir:
        os.makedirs(log_dir, exist_ok=True)
        handlers.append(TimedRotatingFileHandler(
            os.path.join(log_dir, "qres.log"), when="D", backupCount=7, encoding="utf-8"))
    for h in handlers:
        h.setLevel(root.level)
        h.setFormatter(fmt)
        root.addHandler(h)
    _configured = True

def get_logger(name: Optional[str] = None) -> logging.Logger:
    _configure_root()
    return logging.getLogger(name or "qres")

# ---------- Key material redaction ----------

_HEX_RUN = re.compile(r"\b[0-9a-fA-F]{32,}\b")

def redact_key_material(s: str) -> str:
    """Mask long hex runs (keys, labels, digests) before a string is logged."""
    if not s:
        return s
    return _HEX_RUN.sub(lambda m: m.group(0)[:6] + "***", s)
