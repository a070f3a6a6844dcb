"""Sample the 32-Game bounds by D_max class.

Runs the bound maximizer from many random starts and groups the local maxima
by how many of Bob's inputs fall back to prior guessing. The overall maximum
should sit in the D_max = 0 class for the uniform game and D_max = 2 for the
biased one.

    python scripts/bound_cases.py [--restarts 256] [--seed 0]
"""

import argparse

from ssgames.bounds import case_maxima
from ssgames.optimize import OptimConfig


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--restarts", type=int, default=256)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    cfg = OptimConfig(restarts=args.restarts, seed=args.seed)
    for variant in ("uniform", "biased"):
        print(f"{variant}:")
        for dmax, value in case_maxima(variant, cfg).items():
            print(f"  D_max = {dmax}: best bound found {value:.12f}")


if __name__ == "__main__":
    main()
