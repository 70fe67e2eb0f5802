#!/usr/bin/env python3
"""Time the canonical-labeling comparison against the brute-force oracle.

Usage: python3 scripts/bench_isomorphism.py [n_pairs]
"""

import random
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))
sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from structkit.structure import isomorphic
from oracles import iso_oracle, random_structure, relabeled_copy


def run(n_pairs: int) -> None:
    rng = random.Random(1)
    pool = [random_structure(rng, max_n=8) for _ in range(500)]
    pairs = []
    for k in range(n_pairs):
        if k % 2:
            s = pool[rng.randrange(len(pool))]
            pairs.append((s, relabeled_copy(rng, s)))
        else:
            pairs.append((pool[rng.randrange(len(pool))],
                          pool[rng.randrange(len(pool))]))
    for name, fn in (("canonical", lambda a, b: isomorphic(a, b) is not None),
                     ("oracle", iso_oracle)):
        t0 = time.monotonic()
        positives = sum(1 for a, b in pairs if fn(a, b))
        dt = time.monotonic() - t0
        print(f"{name:>10}: {dt:.3f}s over {n_pairs} pairs "
              f"({positives} isomorphic)")


if __name__ == "__main__":
    run(int(sys.argv[1]) if len(sys.argv) > 1 else 200)
