"""Reproduce the win-rate table and print it as a grid.

    python scripts/reproduce_table1.py [--seed 42] [--restarts 64]
"""

import argparse
import sys

from ssgames.cli import TABLE1_SEED, TABLE_GAMES, TABLE_ROWS, table1
from ssgames.optimize import OptimConfig

ROW_LABELS = {
    "cr": "classical reversible",
    "ci": "classical (ir)reversible",
    "qr": "quantum reversible",
    "qi": "quantum (ir)reversible",
}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=TABLE1_SEED)
    parser.add_argument("--restarts", type=int, default=64)
    args = parser.parse_args()

    rec, ok = table1(OptimConfig(restarts=args.restarts, seed=args.seed))
    width = 26
    print(" " * width + "".join(f"{g:>28}" for g in TABLE_GAMES))
    for row in TABLE_ROWS:
        cells = "".join(f"{rec[f'table1.{row}.{g}']:>28}" for g in TABLE_GAMES)
        print(f"{ROW_LABELS[row]:<{width}}{cells}")
    print()
    for name in ("game32", "b32"):
        print(f"maximized discrimination bound, {name}: {rec[f'table1.bound.{name}']}")
    print("all tolerances met" if ok else "TOLERANCE VIOLATED")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
