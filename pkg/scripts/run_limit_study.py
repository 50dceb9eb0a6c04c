#!/usr/bin/env python3
"""Convergence of the grid oracle toward the exact small-parameter limit."""

import sys
from pathlib import Path

from bellfield.cli import main

OUT = Path(__file__).resolve().parent.parent / "results"

if __name__ == "__main__":
    OUT.mkdir(exist_ok=True)
    target = OUT / "limit_study.csv"
    code = main(
        [
            "limit-study",
            "--angles", "30",
            "--sigmas", "0.04,0.02,0.01,0.005",
            "--betas", "1e-2,1e-3",
            "--output", str(target),
        ]
    )
    if code == 0:
        print(target.read_text())
        print(f"written: {target}")
    sys.exit(code)
