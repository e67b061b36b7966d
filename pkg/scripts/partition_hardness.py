#!/usr/bin/env python3
"""Stress the game engine on equal-sum partition boards of growing size,
cross-checking every verdict against the subset-sum oracle and reporting
wall time per size."""

import random
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from spinsynth.game import solve_board
from spinsynth.oracle import (
    PartitionInstance,
    exhaustive_partition_check,
    partition_to_game,
)


def main():
    max_size = int(sys.argv[1]) if len(sys.argv) > 1 else 14
    per_size = int(sys.argv[2]) if len(sys.argv) > 2 else 10
    rng = random.Random(7)
    for size in range(1, max_size + 1):
        t0 = time.perf_counter()
        positives = 0
        for _ in range(per_size):
            numbers = tuple(rng.randint(1, 30) for _ in range(size))
            board, bound = partition_to_game(PartitionInstance(numbers))
            strategy, _ = solve_board(board, bound)
            verdict = strategy is not None
            if verdict != exhaustive_partition_check(numbers):
                print(f"MISMATCH at {numbers}")
                return 1
            positives += verdict
        dt = (time.perf_counter() - t0) / per_size
        print(f"size {size:2}: {positives}/{per_size} positive, {dt * 1000:7.1f} ms/instance")
    return 0


if __name__ == "__main__":
    sys.exit(main())
