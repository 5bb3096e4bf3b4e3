#!/usr/bin/env python3
import argparse
import json
import os
import sys

from qres.errors import ConfigError, QresError, error_line
from qres.settings import load_config


# ---------- helpers ----------

def _read_json(path: str, what: str):
    from qres.utils import read_json

    try:
        return read_json(path)
    except FileNotFoundError as e:
        raise ConfigError(f"{what} not found: {path}") from e
    except ValueError as e:
        raise ConfigError(f"{what} {path} is not valid JSON: {e}") from e


def _read_text(path: str, what: str) -> str:
    from qres.utils import load_file

    try:
        text = load_file(path)
    except FileNotFoundError as e:
        raise ConfigError(f"{what} not found: {path}") from e
    if not text.strip():
        raise ConfigError(f"{what} {path} is empty")
    return text


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _serve(server) -> int:
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


# ---------- auditor ----------

def cmd_auditor_keygen(args, cfg) -> int:
    from qres.actors.auditor import auditor_keygen, broker_material
    from qres.utils import write_json

    state = args.state or cfg["auditor"]["state_path"]
    auditor = auditor_keygen(state, overwrite=args.force)
    if args.broker_out:
        write_json(args.broker_out, broker_material(auditor))
    _emit({"state": state, "public_key": auditor.public_key.hex()})
    return 0


def cmd_auditor_enroll(args, cfg) -> int:
    from qres.actors.auditor import enroll_provider

    doc = _read_json(args.cert, "certificate file")
    enrolled = enroll_provider(args.state or cfg["auditor"]["state_path"], doc.get("cert", doc))
    _emit(enrolled)
    return 0


def cmd_auditor_register(args, cfg) -> int:
    from qres.actors.auditor import register_provider
    from qres.utils import write_json

    doc = _read_json(args.cert, "certificate file")
    cert = doc.get("cert", doc)
    reg = register_provider(args.state or cfg["auditor"]["state_path"], cert)
    write_json(args.out, reg)
    _emit({"provider_id": reg["provider_id"], "registration": args.out})
    return 0


def cmd_auditor_sign(args, cfg) -> int:
    from qres.actors.auditor import sign_submission
    from qres.utils import write_json

    submission = _read_json(args.submission, "submission file")
    signed = sign_submission(args.state or cfg["auditor"]["state_path"], args.provider_id, submission)
    out = args.out or args.submission
    write_json(out, signed)
    _emit({"submission": out, "tokens": len(signed["encrypted_tokens"])})
    return 0


def cmd_auditor_resolve(args, cfg) -> int:
    from qres.actors.auditor import resolve

    nonce, challenge = args.nonce, args.challenge
    if args.record:
        rec = _read_json(args.record, "store record")
        rec = rec.get("record", rec)
        nonce, challenge = rec.get("nonce"), rec.get("challenge")
    if not nonce or not challenge:
        raise ConfigError("resolve needs --nonce and --challenge, or --record")
    print(resolve(args.state or cfg["auditor"]["state_path"], nonce, challenge))
    return 0


def cmd_auditor_serve(args, cfg) -> int:
    from qres.actors.auditor import serve_auditor

    return _serve(serve_auditor(args.state or cfg["auditor"]["state_path"], args.listen or cfg["auditor"]["address"]))


# ---------- provider ----------

def cmd_provider_keygen(args, cfg) -> int:
    from qres.actors.provider import provider_keygen

    keys = provider_keygen(args.id, args.out)
    _emit({"provider_id": keys.provider_id, "key_file": args.out})
    return 0


def cmd_provider_tokenize(args, cfg) -> int:
    from qres.secsla import check_template, load_secsla, tokenize_offering
    from qres.utils import write_json

    doc = load_secsla(_read_text(args.secsla, "secSLA file"))
    if args.template:
        check_template(doc, load_secsla(_read_text(args.template, "template file")))
    tokens = tokenize_offering(doc)
    write_json(args.out, {"sla_id": doc.sla_id, "tokens": [t.hex() for t in tokens]})
    _emit({"sla_id": doc.sla_id, "tokens": len(tokens), "out": args.out})
    return 0


def _token_list(doc, key: str):
    try:
        return [bytes.fromhex(t) for t in doc[key]]
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"expected a hex list under '{key}': {e}") from e


def cmd_provider_encrypt(args, cfg) -> int:
    from qres.actors.provider import load_provider_keys
    from qres.crypto.prims import enc_token
    from qres.utils import write_json

    keys = load_provider_keys(args.key_file)
    tokens = _token_list(_read_json(args.tokens, "token file"), "tokens")
    write_json(args.out, {"encrypted_tokens": [enc_token(keys.key, t).hex() for t in tokens]})
    _emit({"encrypted_tokens": len(tokens), "out": args.out})
    return 0


def cmd_provider_challenge(args, cfg) -> int:
    from qres.actors.provider import registration_secret
    from qres.anonet.auditor import make_challenge
    from qres.crypto.rng import default_rng
    from qres.utils import write_json

    secret = registration_secret(_read_json(args.registration, "registration file"))
    encrypted = _read_json(args.encrypted, "encrypted token file")
    _token_list(encrypted, "encrypted_tokens")
    chall = make_challenge(secret, default_rng())
    write_json(args.out, {**chall.to_dict(), "encrypted_tokens": encrypted["encrypted_tokens"]})
    _emit({"anonymous_id": chall.anonymous_id, "submission": args.out})
    return 0


def cmd_provider_submit(args, cfg) -> int:
    from pydantic import ValidationError

    from qres.actors.deploy import broker_route
    from qres.models import RegisterSecSla
    from qres.net.wire import FrameType, json_frame, parse_json, raise_for_error

    try:
        msg = RegisterSecSla.model_validate(_read_json(args.submission, "submission file"))
    except ValidationError as e:
        raise ConfigError(f"submission is not signed or malformed: {e.errors()[0]['msg']}") from e
    route = broker_route(cfg)
    reply = raise_for_error(route.request(json_frame(FrameType.REGISTER_SECSLA, msg.model_dump())), FrameType.ACK)
    print(parse_json(reply)["anonymous_id"])
    return 0


def cmd_provider_serve(args, cfg) -> int:
    from qres.actors.deploy import serve_provider
    from qres.actors.provider import load_provider_keys, registration_secret
    from qres.anonet.relay import rendezvous_keys
    from qres.mpc.qese import QeseProvider

    keys = load_provider_keys(args.key_file)
    reg = _read_json(args.registration, "registration file")
    submission = _read_json(args.submission, "submission file")
    qcfg = cfg["qese"]
    provider = QeseProvider(
        keys.key,
        mode=qcfg["mode"],
        k_val=bytes.fromhex(reg["k_val"]) if reg.get("k_val") else None,
        free_xor=qcfg["free_xor"],
        cut_and_choose_n=qcfg["cut_and_choose_n"] if qcfg["cut_and_choose"] else 0,
        session_timeout_s=float(qcfg["session_timeout_s"]),
    )
    try:
        rendezvous = bytes.fromhex(submission["challenge"])[:16]
        nonce = bytes.fromhex(submission["nonce"])
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"submission file has no usable challenge: {e}") from e
    owner = rendezvous_keys(registration_secret(reg), nonce)
    return _serve(serve_provider(cfg, provider, rendezvous, owner, args.listen, args.advertise))


# ---------- customer ----------

def cmd_customer_submit(args, cfg) -> int:
    from qres.actors.customer import CustomerClient, build_request
    from qres.net.transport import TcpEndpoint
    from qres.rendering import render_ranking_md
    from qres.secsla import load_secsla, parse_requirements, tokenize_requirements
    from qres.settings import split_address
    from qres.utils import write_json

    doc, priorities = parse_requirements(_read_text(args.requirements, "requirements file"))
    template = load_secsla(_read_text(args.template, "template file")) if args.template else None
    reqs = tokenize_requirements(doc, priorities, template)
    client = CustomerClient(args.customer_id, TcpEndpoint(*split_address(cfg["broker"]["listen"])))
    resolve_top = args.resolve_top or bool(cfg["broker"]["resolve_top"])
    result = client.submit(build_request(args.customer_id, reqs, args.scheme, resolve_top))
    body = result.model_dump()
    if args.out:
        write_json(args.out, body)
    print(render_ranking_md(body), end="")
    return 0


def cmd_customer_show(args, cfg) -> int:
    from qres.rendering import render_ranking_md

    print(render_ranking_md(_read_json(args.file, "ranking file")), end="")
    return 0


# ---------- broker & relay ----------

def cmd_broker_serve(args, cfg) -> int:
    from qres.actors.deploy import serve_broker

    return _serve(serve_broker(cfg, _read_json(args.keys, "broker key file")))


def cmd_relay_keygen(args, cfg) -> int:
    from qres.actors.deploy import relay_keygen

    keys = relay_keygen(args.name, args.out)
    _emit({"name": args.name, "public_key": keys.public.hex(), "key_file": args.out})
    return 0


def cmd_relay_serve(args, cfg) -> int:
    from qres.actors.deploy import load_relay_keys, serve_relay

    name, keys = load_relay_keys(args.key_file)
    return _serve(serve_relay(cfg, name, keys, args.listen))


# ---------- scenario, bench, circuits ----------

def _schemes(choice: str):
    from qres.ranking import SCHEMES

    return SCHEMES if choice == "both" else (choice,)


def cmd_scenario_run(args, cfg) -> int:
    from qres.actors.scenario import Scenario, plaintext_rank, run_scenario
    from qres.rendering import render_ranking_md
    from qres.settings import weights_from_config

    try:
        scenario = Scenario(args.providers, args.slos, args.keywords, args.levels, args.profile, args.seed)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    run = run_scenario(scenario, cfg, args.store, _schemes(args.scheme), resolve_top=args.resolve_top)
    status = 0
    for scheme, result in run.rankings.items():
        print(render_ranking_md(result.to_document(), run.resolved.get(scheme)))
        if args.check:
            expected = plaintext_rank(run.data, run.anonymous_ids, scheme, weights_from_config(cfg))
            same = expected.to_document() == result.to_document()
            print(f"plaintext check scheme={scheme} {'ok' if same else 'MISMATCH'}")
            status = status or (0 if same else 1)
    return status


def cmd_bench(args, cfg) -> int:
    from qres.actors.bench import bench_run, load_grid, summarize, write_csv
    from qres.rendering import render_bench_report

    reps = cfg["bench"]["reps"] if args.reps is None else args.reps
    if reps < 1:
        raise ConfigError(f"--reps must be at least 1, got {reps}")
    rows = bench_run(load_grid(args.grid), reps, cfg, seed=args.seed)
    write_csv(rows, args.out)
    report = render_bench_report(rows, summarize(rows), reps)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as f:
            f.write(report)
    print(report, end="")
    return 0


def cmd_circuits_export(args, cfg) -> int:
    from qres.circuits.qese import export_resources

    _emit(export_resources(args.out))
    return 0


# ---------- parser ----------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qres", description="QRES secSLA marketplace CLI")
    parser.add_argument("--config", default=os.getenv("QRES_CONFIG"), help="Path to YAML config")
    groups = parser.add_subparsers(dest="group", required=True)

    auditor = groups.add_parser("auditor", help="Trusted registrar").add_subparsers(dest="action", required=True)
    p = auditor.add_parser("keygen", help="Create auditor keys and state")
    p.add_argument("--state", help="Auditor state file (default: auditor.state_path)")
    p.add_argument("--broker-out", help="Also write the broker's key material here")
    p.add_argument("--force", action="store_true", help="Overwrite an existing state file")
    p.set_defaults(func=cmd_auditor_keygen)
    p = auditor.add_parser("enroll", help="Record a vetted provider's signing key")
    p.add_argument("--state")
    p.add_argument("--cert", required=True, help="Provider key file or bare certificate JSON")
    p.set_defaults(func=cmd_auditor_enroll)
    p = auditor.add_parser("register", help="Verify a provider certificate and issue its secret")
    p.add_argument("--state")
    p.add_argument("--cert", required=True, help="Provider key file or bare certificate JSON")
    p.add_argument("--out", required=True, help="Registration file handed back to the provider")
    p.set_defaults(func=cmd_auditor_register)
    p = auditor.add_parser("sign-secsla", help="Sign a provider's encrypted token list")
    p.add_argument("--state")
    p.add_argument("--provider-id", required=True)
    p.add_argument("--submission", required=True)
    p.add_argument("--out", help="Signed submission (default: overwrite --submission)")
    p.set_defaults(func=cmd_auditor_sign)
    p = auditor.add_parser("resolve", help="Map an anonymous challenge back to a provider id")
    p.add_argument("--state")
    p.add_argument("--nonce")
    p.add_argument("--challenge")
    p.add_argument("--record", help="Broker store record to take nonce and challenge from")
    p.set_defaults(func=cmd_auditor_resolve)
    p = auditor.add_parser("serve", help="Serve resolve requests over TCP")
    p.add_argument("--state")
    p.add_argument("--listen", help="host:port (default: auditor.address)")
    p.set_defaults(func=cmd_auditor_serve)

    provider = groups.add_parser("provider", help="Provider agent").add_subparsers(dest="action", required=True)
    p = provider.add_parser("keygen", help="Create a provider key file")
    p.add_argument("--id", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_provider_keygen)
    p = provider.add_parser("tokenize", help="Tokenize a secSLA file")
    p.add_argument("--secsla", required=True)
    p.add_argument("--template", help="Template secSLA the file must match")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_provider_tokenize)
    p = provider.add_parser("encrypt", help="Encrypt a token file under the provider key")
    p.add_argument("--key-file", required=True)
    p.add_argument("--tokens", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_provider_encrypt)
    p = provider.add_parser("challenge", help="Bind encrypted tokens to a fresh anonymous challenge")
    p.add_argument("--registration", required=True)
    p.add_argument("--encrypted", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_provider_challenge)
    p = provider.add_parser("submit", help="Send a signed submission to the broker through the relays")
    p.add_argument("--submission", required=True)
    p.set_defaults(func=cmd_provider_submit)
    p = provider.add_parser("serve", help="Answer keyword sessions behind the entry relay")
    p.add_argument("--key-file", required=True)
    p.add_argument("--registration", required=True)
    p.add_argument("--submission", required=True)
    p.add_argument("--listen", required=True, help="host:port for the session server")
    p.add_argument("--advertise", help="host:port the entry relay should dial (default: --listen)")
    p.set_defaults(func=cmd_provider_serve)

    customer = groups.add_parser("customer", help="Customer client").add_subparsers(dest="action", required=True)
    p = customer.add_parser("submit", help="Submit requirements and print the ranking")
    p.add_argument("--requirements", required=True, help="Requirements XML with priorities")
    p.add_argument("--customer-id", required=True)
    p.add_argument("--scheme", choices=["boolean", "prioritized"])
    p.add_argument("--resolve-top", action="store_true")
    p.add_argument("--template", help="Template secSLA the requirements must match")
    p.add_argument("--out", help="Write the ranking document as JSON")
    p.set_defaults(func=cmd_customer_submit)
    p = customer.add_parser("show-ranking", help="Print a saved ranking document")
    p.add_argument("--file", required=True)
    p.set_defaults(func=cmd_customer_show)

    broker = groups.add_parser("broker", help="Broker daemon").add_subparsers(dest="action", required=True)
    p = broker.add_parser("serve")
    p.add_argument("--keys", required=True, help="Broker key material from 'auditor keygen --broker-out'")
    p.set_defaults(func=cmd_broker_serve)

    relay = groups.add_parser("relay", help="Onion relay").add_subparsers(dest="action", required=True)
    p = relay.add_parser("keygen")
    p.add_argument("--name", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_relay_keygen)
    p = relay.add_parser("serve")
    p.add_argument("--key-file", required=True)
    p.add_argument("--listen", help="host:port (default: the node's entry in relays.nodes)")
    p.set_defaults(func=cmd_relay_serve)

    scenario = groups.add_parser("scenario", help="In-process marketplace").add_subparsers(dest="action", required=True)
    p = scenario.add_parser("run", help="Generate a seeded scenario and run the searches")
    p.add_argument("--providers", type=int, default=3)
    p.add_argument("--slos", type=int, default=10)
    p.add_argument("--keywords", type=int, default=5)
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--profile", choices=["mixed", "high", "none"], default="mixed")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scheme", choices=["both", "boolean", "prioritized"], default="both")
    p.add_argument("--store", help="Store directory (default: a fresh temp dir)")
    p.add_argument("--resolve-top", action="store_true")
    p.add_argument("--check", action="store_true", help="Compare against the plaintext ranking")
    p.set_defaults(func=cmd_scenario_run)

    p = groups.add_parser("bench", help="Time searches over a scenario grid")
    p.add_argument("--grid", required=True, help="YAML grid (see configs/)")
    p.add_argument("--reps", type=int, help="Repetitions per cell (default: bench.reps)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="CSV output")
    p.add_argument("--report", help="Markdown summary output")
    p.set_defaults(func=cmd_bench)

    circuits = groups.add_parser("circuits", help="Embedded circuits").add_subparsers(dest="action", required=True)
    p = circuits.add_parser("export", help="Write the component circuits as Bristol files")
    p.add_argument("--out", help="Target directory (default: qres/circuits/resources)")
    p.set_defaults(func=cmd_circuits_export)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except QresError as e:
        print(error_line(e), file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"error code=io_error msg={e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
