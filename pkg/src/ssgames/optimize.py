"""Strategy search for each gate class.

Classical classes are searched exhaustively with exact rationals. Quantum
classes use a derivative-free coordinate ascent from many seeded random
starts. Restarts are advanced together as numpy batches; every operation in
the batch is elementwise across restarts, so a restart's trajectory depends
only on its own sub-seed, never on how restarts are grouped or threaded.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .games import GameSpec, Rate, Strategy, serialize_strategy, win_rate
from .gates import (
    CLASSICAL_GATES,
    Channel,
    GateClass,
    N_CHANNEL_PARAMS,
    gate_params,
    kraus_from_params,
    rotated_z,
    rotation_z_row,
    rotation_x,
    unitary_from_rotvec,
)

MAX_SEARCH_SPACE = 10**8
# gains below this are rounding noise; accepting them stalls step shrinking on plateaus
MIN_IMPROVEMENT = 1e-14
MAX_PATTERN_DOUBLINGS = 8


class SearchSpaceTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class OptimConfig:
    restarts: int = 64
    seed: int = 0
    max_iters: int = 2000
    convergence_tol: float = 1e-10
    step_init: float = 0.3

    def __post_init__(self):
        if self.restarts < 1 or self.max_iters < 1:
            raise ValueError("restarts and max_iters must be positive")
        if not self.convergence_tol > 0 or not self.step_init > 0:
            raise ValueError("convergence_tol and step_init must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass
class SearchResult:
    best_rate: Rate
    strategy: Strategy
    evaluations: int
    per_restart_rates: list[float] = field(default_factory=list)


def restart_rng(seed: int, index: int) -> np.random.Generator:
    """Independent generator for restart ``index``; the same for any execution order."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def thread_count() -> int:
    env = os.environ.get("SSG_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


# -- exhaustive classical search --------------------------------------------

def exhaustive_classical(game: GameSpec, irreversible: bool) -> SearchResult:
    """Best deterministic classical strategy, exact.

    Gates are tried in the order I < X < E0 < E1 with Alice's inputs before
    Bob's, and the first maximizer in that lexicographic order is returned.
    """
    alphabet = CLASSICAL_GATES if irreversible else CLASSICAL_GATES[:2]
    n_slots = game.n_alice + game.n_bob
    if len(alphabet) ** n_slots > MAX_SEARCH_SPACE:
        raise SearchSpaceTooLarge(
            f"SearchSpaceTooLarge: {len(alphabet)}^{n_slots} strategies exceeds {MAX_SEARCH_SPACE}"
        )
    # integer weights over a common denominator keep the inner loop cheap
    denom = math.lcm(*(p.denominator for row in game.prior for p in row))
    weight = [[int(p * denom) for p in row] for row in game.prior]
    # classical gate i maps bit x to out[i][x]
    out = [[0, 1], [1, 0], [0, 0], [1, 1]][: len(alphabet)]
    # score[b][g][x]: prior mass won on column b when Bob plays g on bit x, per Alice input
    gain = [
        [[[weight[a][b] if game.wins(a, b, out[g][x]) else 0 for a in range(game.n_alice)]
          for x in (0, 1)] for g in range(len(alphabet))]
        for b in range(game.n_bob)
    ]
    best, best_assign, count = -1, None, 0
    for alice in itertools.product(range(len(alphabet)), repeat=game.n_alice):
        xs = [out[g][0] for g in alice]
        for bob in itertools.product(range(len(alphabet)), repeat=game.n_bob):
            count += 1
            total = 0
            for b, g in enumerate(bob):
                row = gain[b][g]
                total += sum(row[x][a] for a, x in enumerate(xs))
            if total > best:
                best, best_assign = total, (alice, bob)
    alice, bob = best_assign
    cls = GateClass.CLASSICAL_IRREVERSIBLE if irreversible else GateClass.CLASSICAL_REVERSIBLE
    strategy = Strategy([alphabet[g] for g in alice], [alphabet[g] for g in bob], cls)
    rate = Fraction(best, denom)
    return SearchResult(rate, strategy, count, [float(rate)])


# -- batched coordinate ascent ----------------------------------------------

class BlockProblem:
    """Objective over ``n_blocks`` parameter blocks, evaluated for a batch of restarts.

    ``features(i, xb)`` maps block ``i``'s parameters ``(R, block_size)`` to a
    feature array; ``value(feats)`` maps the list of per-block features to
    objective values ``(R,)``. ``project`` may map a block back to its feasible
    set after every trial step.
    """

    n_blocks: int
    block_size: int

    def features(self, i: int, xb: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def value(self, feats: list[np.ndarray]) -> np.ndarray:
        raise NotImplementedError

    def project(self, i: int, xb: np.ndarray) -> np.ndarray:
        return xb

    def coordinates(self, i: int) -> Sequence[int]:
        """Coordinates of block ``i`` that can change the objective."""
        return range(self.block_size)


def _select(mask: np.ndarray, new: np.ndarray, old: np.ndarray) -> np.ndarray:
    return np.where(mask.reshape((-1,) + (1,) * (new.ndim - 1)), new, old)


def _sweep(problem: BlockProblem, x, feats, f, step):
    """One coordinate sweep plus pattern extrapolation; all rows are live restarts."""
    improved = np.zeros(x.shape[0], dtype=bool)
    x_start = x.copy()
    evals = 0
    for i in range(problem.n_blocks):
        for j in problem.coordinates(i):
            for sign in (1.0, -1.0):
                xb = x[:, i].copy()
                xb[:, j] += sign * step
                xb = problem.project(i, xb)
                fi = problem.features(i, xb)
                trial = feats.copy()
                trial[i] = fi
                ft = problem.value(trial)
                evals += x.shape[0]
                better = ft > f + MIN_IMPROVEMENT
                if better.any():
                    x[:, i] = _select(better, xb, x[:, i])
                    feats[i] = _select(better, fi, feats[i])
                    f = np.where(better, ft, f)
                    improved |= better
    moving = improved
    d = x - x_start
    for _ in range(MAX_PATTERN_DOUBLINGS):
        xt = x + d * moving[:, None, None]
        for i in range(problem.n_blocks):
            xt[:, i] = problem.project(i, xt[:, i])
        ft_feats = [problem.features(i, xt[:, i]) for i in range(problem.n_blocks)]
        ft = problem.value(ft_feats)
        evals += int(moving.sum())
        moving = moving & (ft > f + MIN_IMPROVEMENT)
        if not moving.any():
            break
        x = _select(moving, xt, x)
        feats = [_select(moving, a, b) for a, b in zip(ft_feats, feats)]
        f = np.where(moving, ft, f)
        d = 2 * d
    return x, feats, f, improved, evals


def coordinate_ascent(problem: BlockProblem, x0: np.ndarray, cfg: OptimConfig) -> tuple[np.ndarray, np.ndarray, int]:
    """Maximize from starts ``x0`` of shape ``(R, n_blocks, block_size)``.

    Each sweep tries ``+step`` then ``-step`` on every coordinate and keeps any
    improvement larger than ``MIN_IMPROVEMENT``. A sweep without improvement
    halves that restart's step; a restart stops once its step falls below
    ``cfg.convergence_tol``. After an improving sweep, the sweep's total
    displacement is extrapolated with doubling lengths while that keeps
    improving, which follows curved ridges far faster than single coordinates.
    Returns final parameters, values and the number of evaluations.
    """
    x = np.array(x0, dtype=float)
    for i in range(problem.n_blocks):
        x[:, i] = problem.project(i, x[:, i])
    feats = [problem.features(i, x[:, i]) for i in range(problem.n_blocks)]
    f = problem.value(feats)
    step = np.full(x.shape[0], cfg.step_init)
    evals = x.shape[0]
    for _ in range(cfg.max_iters):
        live = np.flatnonzero(step >= cfg.convergence_tol)
        if live.size == 0:
            break
        xs, fs_feats, fs, improved, n = _sweep(
            problem, x[live], [a[live] for a in feats], f[live], step[live]
        )
        evals += n
        x[live] = xs
        for a, b in zip(feats, fs_feats):
            a[live] = b
        f[live] = fs
        step[live] = np.where(improved, step[live], step[live] / 2)
    return x, f, evals


def run_restarts(problem_factory: Callable[[], BlockProblem], x0: np.ndarray, cfg: OptimConfig) -> tuple[np.ndarray, np.ndarray, int]:
    """Run :func:`coordinate_ascent` on contiguous chunks of restarts in parallel."""
    n = x0.shape[0]
    workers = min(thread_count(), n)
    if workers <= 1:
        return coordinate_ascent(problem_factory(), x0, cfg)
    bounds = np.linspace(0, n, workers + 1).astype(int)
    chunks = [x0[lo:hi] for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        parts = list(pool.map(lambda c: coordinate_ascent(problem_factory(), c, cfg), chunks))
    return (
        np.concatenate([p[0] for p in parts]),
        np.concatenate([p[1] for p in parts]),
        sum(p[2] for p in parts),
    )


# -- game objective on gate features ----------------------------------------

class GameObjective(BlockProblem):
    """Win rate from per-gate features.

    Alice's gate ``a`` is summarized by the Bloch vector of ``A_a(|0><0|)``;
    Bob's gate ``b`` by ``(c, e)`` such that his outcome-1 probability on an
    input with Bloch vector ``v`` is ``(c + e.v) / 2``.
    """

    def __init__(self, game: GameSpec):
        self.n_alice, self.n_bob = game.n_alice, game.n_bob
        self.n_blocks = game.n_alice + game.n_bob
        p = game.prior_array()
        w0, w1 = game.win_array(0), game.win_array(1)
        self.base = float(np.sum(p * w0))
        self.d = p * (w1 - w0)

    def alice_features(self, xb: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def bob_features(self, xb: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def features(self, i, xb):
        return self.alice_features(xb) if i < self.n_alice else self.bob_features(xb)

    def value(self, feats):
        v = np.stack(feats[: self.n_alice], axis=1)  # (R, nA, 3)
        bob = np.stack(feats[self.n_alice:], axis=1)  # (R, nB, 4)
        dots = (
            v[:, :, None, 0] * bob[:, None, :, 1]
            + v[:, :, None, 1] * bob[:, None, :, 2]
            + v[:, :, None, 2] * bob[:, None, :, 3]
        )
        q = (bob[:, None, :, 0] + dots) / 2
        return self.base + np.sum((q * self.d).reshape(q.shape[0], -1), axis=1)


class UnitaryObjective(GameObjective):
    block_size = 3

    def alice_features(self, xb):
        return rotated_z(xb)

    def bob_features(self, xb):
        r = rotation_z_row(xb)
        return np.concatenate([np.ones((xb.shape[0], 1)), -r], axis=1)


def channel_features(k: np.ndarray, alice: bool) -> np.ndarray:
    """Features of Kraus batches ``(R, 4, 2, 2)`` (see :class:`GameObjective`)."""
    if alice:
        psi0, psi1 = k[:, :, 0, 0], k[:, :, 1, 0]
        r00 = np.sum(np.abs(psi0) ** 2, axis=1)
        r11 = np.sum(np.abs(psi1) ** 2, axis=1)
        r01 = np.sum(psi0 * np.conj(psi1), axis=1)
        return np.stack([2 * r01.real, -2 * r01.imag, r00 - r11], axis=1)
    # effect for outcome 1: E = sum_k K_k^dag |1><1| K_k
    row0, row1 = k[:, :, 1, 0], k[:, :, 1, 1]
    e00 = np.sum(np.abs(row0) ** 2, axis=1)
    e11 = np.sum(np.abs(row1) ** 2, axis=1)
    e01 = np.sum(np.conj(row0) * row1, axis=1)
    return np.stack([e00 + e11, 2 * e01.real, -2 * e01.imag, e00 - e11], axis=1)


class ChannelObjective(GameObjective):
    block_size = N_CHANNEL_PARAMS

    def coordinates(self, i):
        # Alice's output state only sees the first isometry column
        return range(N_CHANNEL_PARAMS // 2) if i < self.n_alice else range(N_CHANNEL_PARAMS)

    def alice_features(self, xb):
        return channel_features(kraus_from_params(xb), alice=True)

    def bob_features(self, xb):
        return channel_features(kraus_from_params(xb), alice=False)


def _pick_best(game: GameSpec, candidates: list[Strategy]) -> tuple[Rate, Strategy]:
    """Max by re-evaluated rate, ties broken by serialized form."""
    scored = [(win_rate(game, s), serialize_strategy(s), s) for s in candidates]
    top = max(r for r, _, _ in scored)
    rate, _, s = min((c for c in scored if c[0] == top), key=lambda c: c[1])
    return rate, s


def _finish(game, x, f, evals, build) -> SearchResult:
    top = float(np.max(f))
    idx = [k for k in range(len(f)) if f[k] == top]
    rate, strategy = _pick_best(game, [build(x[k]) for k in idx])
    return SearchResult(rate, strategy, evals, [float(v) for v in f])


def _unitary_strategy(n_alice: int, row: np.ndarray) -> Strategy:
    gates = [unitary_from_rotvec(w) for w in row]
    return Strategy(gates[:n_alice], gates[n_alice:], GateClass.QUANTUM_REVERSIBLE)


def optimize_unitary(
    game: GameSpec, cfg: OptimConfig = OptimConfig(), angles: Optional[Sequence[float]] = None
) -> SearchResult:
    """Best unitary strategy found by seeded multi-start coordinate ascent.

    With ``angles`` given, the search is instead an exhaustive enumeration of
    x-rotations by those angles for every gate.
    """
    n = game.n_alice + game.n_bob
    if angles is not None:
        return _unitary_grid(game, list(angles))
    starts = np.stack([restart_rng(cfg.seed, k).normal(size=(n, 3)) for k in range(cfg.restarts)])
    x, f, evals = run_restarts(lambda: UnitaryObjective(game), starts, cfg)
    return _finish(game, x, f, evals, lambda row: _unitary_strategy(game.n_alice, row))


def _unitary_grid(game: GameSpec, angles: list[float]) -> SearchResult:
    n = game.n_alice + game.n_bob
    if len(angles) ** n > MAX_SEARCH_SPACE:
        raise SearchSpaceTooLarge(f"SearchSpaceTooLarge: {len(angles)}^{n} grid points")
    combos = np.array(list(itertools.product(angles, repeat=n)), dtype=float)
    x = np.zeros((len(combos), n, 3))
    x[:, :, 0] = combos
    obj = UnitaryObjective(game)
    f = obj.value([obj.features(i, x[:, i]) for i in range(n)])
    k = int(np.argmax(f))
    strategy = Strategy(
        [rotation_x(t) for t in combos[k, : game.n_alice]],
        [rotation_x(t) for t in combos[k, game.n_alice:]],
        GateClass.QUANTUM_REVERSIBLE,
    )
    return SearchResult(win_rate(game, strategy), strategy, len(combos), [float(f[k])])


def _channel_strategy(n_alice: int, row: np.ndarray) -> Strategy:
    gates = [Channel(tuple(k)) for k in kraus_from_params(row)]
    return Strategy(gates[:n_alice], gates[n_alice:], GateClass.QUANTUM_IRREVERSIBLE)


def optimize_channel(game: GameSpec, cfg: OptimConfig = OptimConfig()) -> SearchResult:
    """Best general-channel strategy found by seeded multi-start coordinate ascent.

    Besides ``cfg.restarts`` random starts, the best exhaustive classical
    (ir)reversible strategy and the best unitary strategy are used as warm
    starts, so the result never falls below either class.
    """
    n = game.n_alice + game.n_bob
    warm = []
    try:
        warm.append(exhaustive_classical(game, irreversible=True).strategy)
    except SearchSpaceTooLarge:
        pass
    warm.append(optimize_unitary(game, cfg).strategy)
    warm_x = [np.stack([gate_params(g) for g in s.alice + s.bob]) for s in warm]
    random_x = [restart_rng(cfg.seed, k).normal(size=(n, N_CHANNEL_PARAMS)) for k in range(cfg.restarts)]
    starts = np.stack(warm_x + random_x)
    x, f, evals = run_restarts(lambda: ChannelObjective(game), starts, cfg)
    return _finish(game, x, f, evals, lambda row: _channel_strategy(game.n_alice, row))

