#!/usr/bin/env python3
"""Byzantine-verification sweeps: the K=2 error-rate comparison and the K=10
sample-complexity comparison."""

import sys

from modestop.cli import main

if __name__ == "__main__":
    args = sys.argv[1:]
    code = main(
        ["blockchain-sim", "--k", "2", "--policy", "sprt,ppr-1v1",
         "--runs", "5000", "--seed", "7", "--out", "blockchain_k2_errors.csv", *args]
    )
    code |= main(
        ["blockchain-sim", "--k", "10", "--policy", "sprt,ppr-1v1,ppr-1vr,ppr-adaptive",
         "--runs", "2000", "--seed", "11", "--out", "blockchain_k10_samples.csv", *args]
    )
    sys.exit(code)
