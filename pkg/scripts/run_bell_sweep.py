#!/usr/bin/env python3
"""Run the full coincidence sweep (all three routes) and print the table."""

import sys
from pathlib import Path

from bellfield.cli import main

OUT = Path(__file__).resolve().parent.parent / "results"

if __name__ == "__main__":
    OUT.mkdir(exist_ok=True)
    target = OUT / "bell_sweep.csv"
    code = main(["bell-sweep", "--mode", "both", "--output", str(target)])
    if code == 0:
        print(target.read_text())
        print(f"written: {target}")
    sys.exit(code)
