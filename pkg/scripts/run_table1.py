#!/usr/bin/env python3
"""Full six-instance stopping-rule comparison (pass --fast to cap the two
slow instances at 20 replications)."""

import sys

from modestop.cli import main

if __name__ == "__main__":
    sys.exit(main(["table1", "--reps", "100", "--seed", "7",
                   "--out", "table1.csv", *sys.argv[1:]]))
