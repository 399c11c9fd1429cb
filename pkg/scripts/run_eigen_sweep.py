"""Master-sequence frequency across copying-error rates.

Usage: python3 scripts/run_eigen_sweep.py [--config F] [--seed N] [--out-dir D]
"""

import sys

from spikesym.cli import run

if __name__ == "__main__":
    sys.exit(run(["eigen-sweep", *sys.argv[1:]]))
