#!/usr/bin/env python3
"""Check a QRES config the way the daemons will load it, then print the effective settings."""
import argparse
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from qres.errors import ConfigError
from qres.settings import load_config, split_address, weights_from_config


def check(path: str) -> dict:
    cfg = load_config(path)
    split_address(cfg["broker"]["listen"])
    split_address(cfg["auditor"]["address"])
    weights_from_config(cfg)
    if not cfg["relays"]["in_process"]:
        from qres.actors.deploy import relay_nodes

        nodes = relay_nodes(cfg)
        if len({n["name"] for n in nodes}) != len(nodes):
            raise ConfigError("relay names must be distinct")
    return cfg


def main():
    ap = argparse.ArgumentParser(description="Validate a QRES config file")
    ap.add_argument("--config", required=True)
    args = ap.parse_args()
    try:
        cfg = check(args.config)
    except ConfigError as e:
        print("[ERROR]", e)
        sys.exit(2)
    relays = "in-process" if cfg["relays"]["in_process"] else f"{len(cfg['relays']['nodes'])} networked"
    print(f"[OK] {args.config}: broker={cfg['broker']['listen']} scheme={cfg['broker']['scheme']} "
          f"mode={cfg['qese']['mode']} relays={relays}")


if __name__ == "__main__":
    main()
