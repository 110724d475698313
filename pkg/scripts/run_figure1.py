#!/usr/bin/env python3
"""Bernoulli-case engine comparison: sweep p1 at delta=0.01 and sweep delta
at p1=0.65, writing one summary CSV per sweep."""

import sys

from modestop.cli import main

if __name__ == "__main__":
    args = sys.argv[1:]
    code = main(
        ["figure1", "--p1", "0.55,0.6,0.65,0.7,0.8,0.9", "--reps", "100",
         "--seed", "7", "--out", "figure1_p1_sweep.csv", *args]
    )
    code |= main(
        ["figure1", "--deltas", "0.1,0.05,0.01,0.005,0.001", "--reps", "100",
         "--seed", "11", "--out", "figure1_delta_sweep.csv", *args]
    )
    sys.exit(code)
