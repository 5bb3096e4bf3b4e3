import json
import os
import sys
from datetime import datetime, timezone

import pytest
from pydantic import ValidationError

os.environ.setdefault("LOG_DIR", os.path.join(os.path.dirname(os.path.abspath(__file__)), "_logs"))

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from qres.broker.store import FileStore
from qres.errors import Corrupt, NotFound
from qres.models import RegisterSecSla, StoredSecSla, SubmitRequirements


def _record(rng, tokens=2) -> StoredSecSla:
    challenge = rng.bytes(32).hex()
    return StoredSecSla(
        nonce=rng.bytes(16).hex(),
        challenge=challenge,
        auditor_signature=rng.bytes(64).hex(),
        encrypted_tokens=[rng.bytes(16).hex() for _ in range(tokens)],
        anonymous_id=challenge,
        submitted_at=datetime(2024, 5, 1, 12, 0, tzinfo=timezone.utc),
    )


class TestFileStore:
    def test_put_get(self, tmp_path, rng):
        store = FileStore(str(tmp_path))
        rec = _record(rng)
        store.put(rec)
        assert store.get(rec.anonymous_id) == rec
        assert store.list() == [rec.anonymous_id]
        assert len(store) == 1

    def test_survives_restart(self, tmp_path, rng):
        records = [_record(rng) for _ in range(3)]
        first = FileStore(str(tmp_path))
        for rec in records:
            first.put(rec)
        reopened = FileStore(str(tmp_path))
        assert reopened.list() == sorted(r.anonymous_id for r in records)
        for rec in records:
            assert reopened.get(rec.anonymous_id).encrypted_tokens == rec.encrypted_tokens

    def test_overwrite_same_id(self, tmp_path, rng):
        store = FileStore(str(tmp_path))
        rec = _record(rng)
        store.put(rec)
        store.put(rec.model_copy(update={"encrypted_tokens": rec.encrypted_tokens[:1]}))
        assert len(store.get(rec.anonymous_id).encrypted_tokens) == 1
        assert not [n for n in os.listdir(tmp_path) if n.startswith(".put-")]

    def test_missing_and_invalid_ids(self, tmp_path, rng):
        store = FileStore(str(tmp_path))
        with pytest.raises(NotFound):
            store.get("ab" * 32)
        with pytest.raises(NotFound):
            store.get("../etc/passwd")

    def test_garbage_file(self, tmp_path, rng):
        store = FileStore(str(tmp_path))
        rec = _record(rng)
        store.put(rec)
        (tmp_path / f"{rec.anonymous_id}.json").write_text("{not json", encoding="utf-8")
        with pytest.raises(Corrupt):
            store.get(rec.anonymous_id)

    def test_checksum_mismatch(self, tmp_path, rng):
        store = FileStore(str(tmp_path))
        rec = _record(rng)
        store.put(rec)
        path = tmp_path / f"{rec.anonymous_id}.json"
        doc = json.loads(path.read_text(encoding="utf-8"))
        doc["record"]["encrypted_tokens"] = [rng.bytes(16).hex()]
        path.write_text(json.dumps(doc), encoding="utf-8")
        with pytest.raises(Corrupt):
            store.get(rec.anonymous_id)

    def test_record_under_wrong_name(self, tmp_path, rng):
        store = FileStore(str(tmp_path))
        rec = _record(rng)
        store.put(rec)
        other = "cd" * 32
        os.replace(tmp_path / f"{rec.anonymous_id}.json", tmp_path / f"{other}.json")
        with pytest.raises(Corrupt):
            store.get(other)

    def test_foreign_files_are_ignored(self, tmp_path, rng):
        store = FileStore(str(tmp_path))
        (tmp_path / "notes.json").write_text("{}", encoding="utf-8")
        (tmp_path / "README").write_text("x", encoding="utf-8")
        assert store.list() == []


class TestModels:
    def test_register_rejects_bad_hex(self, rng):
        with pytest.raises(ValidationError):
            RegisterSecSla(
                nonce=rng.bytes(16).hex(),
                challenge=rng.bytes(32).hex(),
                auditor_signature=rng.bytes(64).hex(),
                encrypted_tokens=["zz" * 16],
            )

    def test_register_needs_tokens(self, rng):
        with pytest.raises(ValidationError):
            RegisterSecSla(
                nonce=rng.bytes(16).hex(),
                challenge=rng.bytes(32).hex(),
                auditor_signature=rng.bytes(64).hex(),
                encrypted_tokens=[],
            )

    def test_requirements_labels_follow_keywords(self):
        with pytest.raises(ValidationError):
            SubmitRequirements(customer_id="c", keywords=["00" * 8, "11" * 8], labels=["HI"])
        req = SubmitRequirements(customer_id="c", keywords=["00" * 8], labels=["LI"])
        assert req.scheme is None and req.resolve_top is False

    def test_extra_fields_are_rejected(self):
        with pytest.raises(ValidationError):
            SubmitRequirements(customer_id="c", keywords=["00" * 8], labels=["HI"], provider_id="leak")
