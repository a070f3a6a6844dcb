"""Compare every optimizer restart against the maximized discrimination bound.

For each built-in game, runs the unitary and channel searches and reports the
largest per-restart win rate next to the bound. A positive gap would mean the
bound is not an upper bound, so every gap printed should be <= 0 up to rounding.

    python scripts/soundness_scan.py [--restarts 64] [--seed 0]
"""

import argparse

from ssgames.bounds import maximize_discrimination_bound
from ssgames.games import BUILTIN_GAMES
from ssgames.optimize import OptimConfig, optimize_channel, optimize_unitary


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--restarts", type=int, default=64)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    cfg = OptimConfig(restarts=args.restarts, seed=args.seed)
    print(f"{'game':<14}{'bound':>16}{'best qr':>16}{'best qi':>16}{'max gap':>12}")
    for name, game in BUILTIN_GAMES.items():
        bound = maximize_discrimination_bound(game, cfg).upper_bound
        qr = optimize_unitary(game, cfg)
        qi = optimize_channel(game, cfg)
        top = max(max(qr.per_restart_rates), max(qi.per_restart_rates))
        print(f"{name:<14}{bound:>16.12f}{qr.best_rate:>16.12f}{qi.best_rate:>16.12f}{top - bound:>12.2e}")


if __name__ == "__main__":
    main()
