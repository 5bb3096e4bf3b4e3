"""File-backed store of anonymous encrypted secSLAs.

One JSON file per anonymous id::

    <root>/<anonymous_id>.json = {"checksum": <sha256 hex of record JSON>, "record": {...}}

The record JSON is serialized with sorted keys and no whitespace before
hashing. Writes go to a temp file that is fsynced and renamed into place.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import tempfile
import threading
from typing import List, Protocol

from pydantic import ValidationError

from qres.errors import Corrupt, NotFound
from qres.models import StoredSecSla
from qres.utils import get_logger

logger = get_logger(__name__)

_ID = re.compile(r"^[0-9a-f]{64}$")


def _canonical(record: dict) -> bytes:
    return json.dumps(record, sort_keys=True, separators=(",", ":")).encode("utf-8")


class SecSlaStore(Protocol):
    def put(self, record: StoredSecSla) -> None: ...

    def get(self, anonymous_id: str) -> StoredSecSla: ...

    def list(self) -> List[str]: ...


class FileStore:
    def __init__(self, root: str):
        self.root = root
        os.makedirs(root, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, anonymous_id: str) -> str:
        if not _ID.match(anonymous_id or ""):
            raise NotFound(f"not an anonymous id: {anonymous_id!r}")
        return os.path.join(self.root, f"{anonymous_id}.json")

    def put(self, record: StoredSecSla) -> None:
        path = self._path(record.anonymous_id)
        body = json.loads(record.model_dump_json())
        doc = {"checksum": hashlib.sha256(_canonical(body)).hexdigest(), "record": body}
        data = json.dumps(doc, sort_keys=True, indent=2).encode("utf-8")
        with self._lock:
            fd, tmp = tempfile.mkstemp(prefix=".put-", dir=self.root)
            try:
                with os.fdopen(fd, "wb") as f:
                    f.write(data)
                    f.flush()
                    os.fsync(f.fileno())
                os.replace(tmp, path)
            except BaseException:
                if os.path.exists(tmp):
                    os.unlink(tmp)
                raise
            self._sync_dir()
        logger.info("store put id=%s tokens=%d", record.anonymous_id[:12], len(record.encrypted_tokens))

    def _sync_dir(self) -> None:
        try:
            dfd = os.open(self.root, os.O_RDONLY)
        except OSError:
            return
        try:
            os.fsync(dfd)
        except OSError:
            pass
        finally:
            os.close(dfd)

    def get(self, anonymous_id: str) -> StoredSecSla:
        path = self._path(anonymous_id)
        try:
            with open(path, "rb") as f:
                raw = f.read()
        except FileNotFoundError:
            raise NotFound(f"no stored secSLA {anonymous_id[:12]}") from None
        try:
            doc = json.loads(raw.decode("utf-8"))
            body = doc["record"]
            checksum = doc["checksum"]
        except (UnicodeDecodeError, ValueError, KeyError, TypeError) as e:
            raise Corrupt(f"record {anonymous_id[:12]} is unreadable: {e}") from e
        if hashlib.sha256(_canonical(body)).hexdigest() != checksum:
            raise Corrupt(f"record {anonymous_id[:12]} fails its checksum")
        try:
            record = StoredSecSla.model_validate(body)
        except ValidationError as e:
            raise Corrupt(f"record {anonymous_id[:12]} does not match the record schema: {e}") from e
        if record.anonymous_id != anonymous_id:
            raise Corrupt(f"record stored under {anonymous_id[:12]} names {record.anonymous_id[:12]}")
        return record

    def list(self) -> List[str]:
        ids = []
        for name in os.listdir(self.root):
            stem, ext = os.path.splitext(name)
            if ext == ".json" and _ID.match(stem):
                ids.append(stem)
        return sorted(ids)

    def __len__(self) -> int:
        return len(self.list())
