"""Oracle vs. spiking equivalence on random rule sets.

Usage: python3 scripts/run_equivalence.py [--config F] [--seed N] [--out-dir D]
"""

import sys

from spikesym.cli import run

if __name__ == "__main__":
    sys.exit(run(["equiv", *sys.argv[1:]]))
