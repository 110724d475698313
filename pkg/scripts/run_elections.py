#!/usr/bin/env python3
"""Every polling-policy / stopping-rule combination on the bundled synthetic
election (or a CSV passed via --data)."""

import sys

from modestop.cli import main

RULES = ("ppr-1v1", "ppr-1vr", "kl-sn-1v1", "kl-sn-1vr", "a1-1v1", "a1-1vr")

if __name__ == "__main__":
    code = 0
    for policy in ("rr", "dcb"):
        for rule in RULES:
            print(f"== {policy}-{rule}")
            code |= main(
                ["election-sim", "--policy", policy, "--rule", rule,
                 "--delta", "0.01", "--batch", "200", "--seeds", "10", "--seed", "7",
                 "--out", f"election_{policy}_{rule}.csv", *sys.argv[1:]]
            )
    sys.exit(code)
