#!/usr/bin/env python3
"""Regenerate the bundled figure-preset sweeps as CSV files.

Usage:
    python scripts/make_figures.py [--out-dir figures] [--mode analytic]
                                   [--trials N] [--seed S] [--format csv]

Equivalent to ``racetrack figures``; kept as a script so the standard
outputs can be rebuilt without remembering CLI flags.
"""

import sys

from racetrack.cli import main

if __name__ == "__main__":
    args = sys.argv[1:]
    if not any(a.startswith("--out-dir") for a in args):
        args = ["--out-dir", "figures", *args]
    sys.exit(main(["figures", *args]))
