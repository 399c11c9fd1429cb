"""ABA/ABB discrimination across spike-jitter levels.

Usage: python3 scripts/run_marcus.py [--config F] [--seed N] [--out-dir D]
"""

import sys

from spikesym.cli import run

if __name__ == "__main__":
    sys.exit(run(["marcus", *sys.argv[1:]]))
