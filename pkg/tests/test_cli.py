import json
import os
import sys

import pytest

os.environ.setdefault("LOG_DIR", os.path.join(os.path.dirname(os.path.abspath(__file__)), "_logs"))

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from cli import main
from qres.actors.deploy import load_relay_keys
from qres.anonet.auditor import verify_secsla
from qres.models import RegisterSecSla


@pytest.fixture(autouse=True)
def no_env_config(monkeypatch):
    for name in ("QRES_CONFIG", "QRES_MODE", "QRES_FREE_XOR", "QRES_SCHEME", "QRES_CUT_AND_CHOOSE"):
        monkeypatch.delenv(name, raising=False)


def _read(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


class TestProviderFlow:
    """Offline registration: keys, tokens, encryption, challenge, auditor signature."""

    @pytest.fixture
    def files(self, tmp_path, listing_xml):
        secsla = tmp_path / "listing.xml"
        secsla.write_text(listing_xml, encoding="utf-8")
        paths = {name: str(tmp_path / f"{name}.json") for name in (
            "state", "broker", "keys", "reg", "tokens", "enc", "enc2", "sub",
        )}
        paths["secsla"] = str(secsla)
        return paths

    def test_full_flow(self, files, capsys):
        f = files
        assert main(["auditor", "keygen", "--state", f["state"], "--broker-out", f["broker"]]) == 0
        assert main(["provider", "keygen", "--id", "provider-a", "--out", f["keys"]]) == 0
        assert main(["auditor", "enroll", "--state", f["state"], "--cert", f["keys"]]) == 0
        assert main(["auditor", "register", "--state", f["state"], "--cert", f["keys"], "--out", f["reg"]]) == 0
        assert main(["provider", "tokenize", "--secsla", f["secsla"], "--out", f["tokens"]]) == 0
        assert main(["provider", "encrypt", "--key-file", f["keys"], "--tokens", f["tokens"], "--out", f["enc"]]) == 0
        assert main(["provider", "encrypt", "--key-file", f["keys"], "--tokens", f["tokens"], "--out", f["enc2"]]) == 0
        assert main(["provider", "challenge", "--registration", f["reg"], "--encrypted", f["enc"],
                     "--out", f["sub"]]) == 0
        assert main(["auditor", "sign-secsla", "--state", f["state"], "--provider-id", "provider-a",
                     "--submission", f["sub"]]) == 0

        tokens = _read(f["tokens"])
        assert tokens["sla_id"] == "sla-listing"
        assert len(tokens["tokens"]) == 2
        assert _read(f["enc"]) == _read(f["enc2"])

        msg = RegisterSecSla.model_validate(_read(f["sub"]))
        pk = bytes.fromhex(_read(f["broker"])["auditor_public_key"])
        assert verify_secsla(pk, bytes.fromhex(msg.challenge), msg.token_bytes(), bytes.fromhex(msg.auditor_signature))

        capsys.readouterr()
        assert main(["auditor", "resolve", "--state", f["state"], "--nonce", msg.nonce, "--challenge", msg.challenge]) == 0
        assert capsys.readouterr().out.strip() == "provider-a"

        record = os.path.join(os.path.dirname(f["sub"]), "record.json")
        with open(record, "w", encoding="utf-8") as fh:
            json.dump({"checksum": "", "record": msg.model_dump()}, fh)
        assert main(["auditor", "resolve", "--state", f["state"], "--record", record]) == 0
        assert capsys.readouterr().out.strip() == "provider-a"

    def test_existing_files_are_kept(self, files):
        f = files
        assert main(["auditor", "keygen", "--state", f["state"]]) == 0
        assert main(["auditor", "keygen", "--state", f["state"]]) == 2
        assert main(["auditor", "keygen", "--state", f["state"], "--force"]) == 0
        assert main(["provider", "keygen", "--id", "p", "--out", f["keys"]]) == 0
        assert main(["provider", "keygen", "--id", "p", "--out", f["keys"]]) == 2

    def test_second_registration(self, files, capsys):
        f = files
        main(["auditor", "keygen", "--state", f["state"]])
        main(["provider", "keygen", "--id", "p", "--out", f["keys"]])
        main(["auditor", "enroll", "--state", f["state"], "--cert", f["keys"]])
        assert main(["auditor", "register", "--state", f["state"], "--cert", f["keys"], "--out", f["reg"]]) == 0
        capsys.readouterr()
        assert main(["auditor", "register", "--state", f["state"], "--cert", f["keys"], "--out", f["reg"]]) == 6
        assert "code=already_registered" in capsys.readouterr().err

    def test_register_needs_enrolment(self, files, capsys):
        f = files
        main(["auditor", "keygen", "--state", f["state"]])
        main(["provider", "keygen", "--id", "p", "--out", f["keys"]])
        capsys.readouterr()
        assert main(["auditor", "register", "--state", f["state"], "--cert", f["keys"], "--out", f["reg"]]) == 6
        assert "code=cert_invalid" in capsys.readouterr().err
        assert not os.path.exists(f["reg"])

    def test_sign_for_the_wrong_provider(self, files):
        f = files
        main(["auditor", "keygen", "--state", f["state"]])
        main(["provider", "keygen", "--id", "p", "--out", f["keys"]])
        main(["auditor", "enroll", "--state", f["state"], "--cert", f["keys"]])
        main(["auditor", "register", "--state", f["state"], "--cert", f["keys"], "--out", f["reg"]])
        main(["provider", "tokenize", "--secsla", f["secsla"], "--out", f["tokens"]])
        main(["provider", "encrypt", "--key-file", f["keys"], "--tokens", f["tokens"], "--out", f["enc"]])
        main(["provider", "challenge", "--registration", f["reg"], "--encrypted", f["enc"], "--out", f["sub"]])
        assert main(["auditor", "sign-secsla", "--state", f["state"], "--provider-id", "q",
                     "--submission", f["sub"]]) == 6

    def test_resolve_needs_a_challenge(self, files):
        main(["auditor", "keygen", "--state", files["state"]])
        assert main(["auditor", "resolve", "--state", files["state"]]) == 2

    def test_missing_auditor_state(self, files):
        assert main(["auditor", "resolve", "--state", files["state"], "--nonce", "00", "--challenge", "00"]) == 2


class TestInputErrors:
    def test_empty_secsla(self, tmp_path, capsys):
        empty = tmp_path / "empty.xml"
        empty.write_text("  \n", encoding="utf-8")
        assert main(["provider", "tokenize", "--secsla", str(empty), "--out", str(tmp_path / "t.json")]) == 2
        assert capsys.readouterr().err.startswith("error code=config_error")

    def test_malformed_secsla(self, tmp_path):
        bad = tmp_path / "bad.xml"
        bad.write_text("<SLA slaid='x'><service>", encoding="utf-8")
        assert main(["provider", "tokenize", "--secsla", str(bad), "--out", str(tmp_path / "t.json")]) == 3

    def test_empty_requirements(self, tmp_path):
        empty = tmp_path / "req.xml"
        empty.write_text("", encoding="utf-8")
        assert main(["customer", "submit", "--requirements", str(empty), "--customer-id", "c"]) == 2

    def test_bench_needs_repetitions(self, tmp_path):
        assert main(["bench", "--grid", "configs/bench_smoke.yaml", "--reps", "0",
                     "--out", str(tmp_path / "b.csv")]) == 2

    def test_bad_config_file(self, tmp_path):
        cfg = tmp_path / "bad.yaml"
        cfg.write_text("qese:\n  mode: Loud\n", encoding="utf-8")
        assert main(["--config", str(cfg), "customer", "show-ranking", "--file", "x.json"]) == 2

    def test_invalid_scenario(self, tmp_path):
        assert main(["scenario", "run", "--providers", "0"]) == 2


def test_show_ranking(tmp_path, capsys):
    doc = {
        "scheme": "boolean",
        "ranking": [
            {"anonymous_id": "ab" * 32, "score_numerator": 2, "score_denominator": 1, "hits_per_keyword": [True, True]},
            {"anonymous_id": "cd" * 32, "score_numerator": 0, "score_denominator": 1, "hits_per_keyword": [False, False]},
        ],
        "excluded": ["ef" * 32],
        "resolved_provider": "provider-a",
    }
    path = tmp_path / "ranking.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    assert main(["customer", "show-ranking", "--file", str(path)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# Provider ranking (boolean)")
    assert "| 1 | `abababababababab` | 2.0000 | 2 | xx |" in out
    assert "Excluded providers (1):" in out
    assert "**provider-a**" in out


def test_scenario_run_check(tmp_path, capsys):
    cfg = tmp_path / "qres.yaml"
    cfg.write_text("qese:\n  free_xor: true\n", encoding="utf-8")
    code = main([
        "--config", str(cfg), "scenario", "run", "--providers", "2", "--slos", "2", "--keywords", "1",
        "--scheme", "boolean", "--store", str(tmp_path / "store"), "--check",
    ])
    out = capsys.readouterr().out
    assert code == 0
    assert "plaintext check scheme=boolean ok" in out
    assert len(os.listdir(tmp_path / "store")) == 2


def test_relay_keygen(tmp_path):
    path = str(tmp_path / "n1.json")
    assert main(["relay", "keygen", "--name", "N1", "--out", path]) == 0
    name, keys = load_relay_keys(path)
    assert name == "N1"
    assert _read(path)["public_key"] == keys.public.hex()


def test_circuits_export(tmp_path, capsys):
    assert main(["circuits", "export", "--out", str(tmp_path)]) == 0
    written = json.loads(capsys.readouterr().out)
    assert set(written) == {"aes128", "hmac_sha256"}
    assert all(os.path.getsize(p) > 0 for p in written.values())
