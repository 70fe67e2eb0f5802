#!/usr/bin/env python3
"""Generate the polygon demonstration corpus and summarize the firings.

Usage: python3 scripts/run_demo.py [out_dir]
"""

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from structkit.cli import main


def run(out_dir: str) -> int:
    code = main(["--seed", "42", "demo-polygons", "--out", out_dir])
    summary = json.loads((Path(out_dir) / "summary.json").read_text())
    correct = sum(1 for item in summary["items"] if item["correct"])
    print(f"corpus: {summary['total']} rasters, {correct} classified correctly")
    print(f"scale-consistent firings: {summary['scale_consistent']}")
    return code


if __name__ == "__main__":
    sys.exit(run(sys.argv[1] if len(sys.argv) > 1 else "demo_out"))
