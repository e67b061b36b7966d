#!/usr/bin/env python3
"""Three-way engine agreement sweep over seeded random processes.

Usage: python scripts/agreement_sweep.py [N_SEEDS] [BOUNDS_PER_INSTANCE]
Exits nonzero on any disagreement between the game engine, the recursive
search and brute force.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from spinsynth.cli import cmd_bench


def main():
    seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 100
    bounds = int(sys.argv[2]) if len(sys.argv) > 2 else 20
    sys.exit(cmd_bench(seeds, bounds, sys.stdout))


if __name__ == "__main__":
    main()
