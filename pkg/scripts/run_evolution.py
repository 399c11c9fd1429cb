"""Evolve rule sets toward the configured target language.

Usage: python3 scripts/run_evolution.py [--config F] [--seed N] [--out-dir D]
"""

import sys

from spikesym.cli import run

if __name__ == "__main__":
    sys.exit(run(["evolve", *sys.argv[1:]]))
