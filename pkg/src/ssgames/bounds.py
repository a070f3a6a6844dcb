"""Upper bounds on quantum win rates from state discrimination.

Replacing Alice's gate by the state ``rho_a = A_a(|0><0|)`` and letting Bob
measure that state optimally can only help the players. For each ``b`` Bob
then solves a two-outcome discrimination problem whose optimum is

    sum_a p[a,b] W0[a,b] + (sum of positive eigenvalues of Delta_b),
    Delta_b = sum_a p[a,b] (W1[a,b] - W0[a,b]) rho_a,

and the sum over ``b`` bounds every quantum strategy whose Alice states are
``rho_a``. Maximizing over Alice's states gives a certified game bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

from .games import BUILTIN_GAMES, GameSpec
from .optimize import BlockProblem, OptimConfig, restart_rng, run_restarts
from .qubit_core import (
    BlochVector,
    DensityMatrix,
    OutsideBlochBall,
    TOL_BLOCH,
    bloch_to_density,
    bloch_vector,
    hermitian_eigenvalues,
    trace_norm,
)

Variant = Literal["uniform", "biased"]

# weight of the other two states relative to rho_i, the threshold of the
# closed-form trace norm, and the prefactor of the sum, per prior variant
_FORM = {"uniform": (1, 1, 18), "biased": (2, 3, 30)}
DMAX_BOUNDARY_TOL = 1e-9


class BadPriors(ValueError):
    pass


class PreconditionViolated(ValueError):
    pass


@dataclass(frozen=True)
class DiscriminationInstance:
    vectors: tuple[BlochVector, ...]
    game: GameSpec

    def __post_init__(self):
        vecs = tuple(bloch_vector(v) for v in self.vectors)
        if len(vecs) != self.game.n_alice:
            raise ValueError(f"need {self.game.n_alice} Bloch vectors, got {len(vecs)}")
        for v in vecs:
            if v.norm() > 1 + TOL_BLOCH:
                raise OutsideBlochBall(f"|v| = {v.norm():.12g} exceeds 1")
        object.__setattr__(self, "vectors", vecs)


@dataclass
class BoundResult:
    upper_bound: float
    per_b_terms: list[float]
    dmax: Optional[int] = None
    argmax_vectors: list[BlochVector] = field(default_factory=list)


def helstrom_bound(rho: DensityMatrix, sigma: DensityMatrix, p: float, q: float) -> float:
    """Optimal probability of telling ``rho`` (prior ``p``) from ``sigma`` (prior ``q``)."""
    if p < 0 or q < 0 or abs(p + q - 1) > 1e-12:
        raise BadPriors(f"BadPriors: p = {p}, q = {q}")
    return 0.5 + trace_norm(p * rho.m - q * sigma.m) / 2


def positive_part(m) -> float:
    l1, l2 = hermitian_eigenvalues(m)
    return max(l1, 0.0) + max(l2, 0.0)


def discrimination_bound(inst: DiscriminationInstance) -> BoundResult:
    game = inst.game
    states = [bloch_to_density(v).m for v in inst.vectors]
    terms = []
    for b in range(game.n_bob):
        base = 0.0
        delta = np.zeros((2, 2), dtype=complex)
        for a in range(game.n_alice):
            p = float(game.prior[a][b])
            w0, w1 = game.wins(a, b, 0), game.wins(a, b, 1)
            base += p * w0
            delta += p * (w1 - w0) * states[a]
        terms.append(base + positive_part(delta))
    variant = game_variant(game)
    dmax = dmax_classify(inst.vectors, variant) if variant else None
    return BoundResult(sum(terms), terms, dmax, list(inst.vectors))


def _check_triple(vectors: Sequence[Sequence[float]]) -> list[np.ndarray]:
    vs = [np.asarray(bloch_vector(v)) for v in vectors]
    if len(vs) != 3:
        raise ValueError(f"need exactly 3 Bloch vectors, got {len(vs)}")
    for v in vs:
        if np.linalg.norm(v) > 1 + TOL_BLOCH:
            raise OutsideBlochBall(f"|v| = {np.linalg.norm(v):.12g} exceeds 1")
    return vs


def difference_norms(vectors: Sequence[Sequence[float]], variant: Variant) -> list[float]:
    """``|v_i - w v_{i+1} - w v_{i+2}|`` for ``i = 0, 1, 2`` (indices mod 3)."""
    vs = _check_triple(vectors)
    w = _FORM[variant][0]
    return [float(np.linalg.norm(vs[i] - w * vs[(i + 1) % 3] - w * vs[(i + 2) % 3])) for i in range(3)]


def bound_32_form(vectors: Sequence[Sequence[float]], variant: Variant = "uniform") -> BoundResult:
    """Closed-form bound for the (biased) 32-Game.

    Each term is the trace norm of ``(-t I + r . sigma) / 2``, which is
    ``max(t, |r|)`` with ``t`` the threshold of the variant.
    """
    _, threshold, denom = _FORM[variant]
    norms = difference_norms(vectors, variant)
    terms = [1 / 6 + max(threshold, r) / denom for r in norms]
    return BoundResult(
        sum(terms), terms, dmax_classify(vectors, variant), [bloch_vector(v) for v in vectors]
    )


def dmax_classify(vectors: Sequence[Sequence[float]], variant: Variant = "uniform") -> int:
    """How many inputs ``b`` leave Bob nothing better than guessing from the prior.

    A norm within 1e-9 of the threshold counts as reaching it.
    """
    threshold = _FORM[variant][1]
    return sum(r < threshold - DMAX_BOUNDARY_TOL for r in difference_norms(vectors, variant))


def game_variant(game: GameSpec) -> Optional[Variant]:
    """``uniform``/``biased`` when ``game`` has the 32-Game priors and predicate."""
    for name, variant in (("game32", "uniform"), ("b32", "biased")):
        ref = BUILTIN_GAMES[name]
        if game.prior == ref.prior and game.win == ref.win:
            return variant
    return None


def gram_identity_check(vectors: Sequence[Sequence[float]]) -> float:
    """Sum of pairwise dot products of three unit vectors summing to zero (always -3/2)."""
    vs = [np.asarray(bloch_vector(v)) for v in vectors]
    if len(vs) != 3:
        raise PreconditionViolated("need exactly 3 vectors")
    if any(abs(np.linalg.norm(v) - 1) > 1e-9 for v in vs):
        raise PreconditionViolated("vectors must have unit length")
    if np.linalg.norm(vs[0] + vs[1] + vs[2]) > 1e-9:
        raise PreconditionViolated("vectors must sum to zero")
    return float(vs[0] @ vs[1] + vs[1] @ vs[2] + vs[0] @ vs[2])


class _BoundObjective(BlockProblem):
    """Discrimination bound as a function of Alice's Bloch vectors (one block each)."""

    block_size = 3

    def __init__(self, game: GameSpec):
        self.n_blocks = game.n_alice
        p = game.prior_array()
        w0, w1 = game.win_array(0), game.win_array(1)
        self.base = np.sum(p * w0, axis=0)
        self.d = p * (w1 - w0)
        self.c = np.sum(self.d, axis=0)

    def project(self, i, xb):
        n = np.sqrt(np.sum(xb**2, axis=1))
        return xb / np.maximum(n, 1.0)[:, None]

    def features(self, i, xb):
        return xb

    def value(self, feats):
        total = 0.0
        for b in range(self.d.shape[1]):
            u = sum(self.d[a, b] * feats[a] for a in range(self.n_blocks))
            un = np.sqrt(np.sum(u**2, axis=1))
            # Delta_b has eigenvalues (c +- |u|) / 2
            c = self.c[b]
            lam = np.maximum((c + un) / 2, 0) + np.maximum((c - un) / 2, 0)
            total = total + self.base[b] + lam
        return total


def maximize_discrimination_bound(game: GameSpec, cfg: OptimConfig = OptimConfig()) -> BoundResult:
    """Largest discrimination bound over Alice's states, by seeded multi-start ascent.

    Vectors are kept in the unit ball by radial projection. The returned bound
    is re-evaluated with :func:`discrimination_bound` at the best vectors.
    """
    starts = np.stack([restart_rng(cfg.seed, k).normal(size=(game.n_alice, 3)) for k in range(cfg.restarts)])
    x, f, _ = run_restarts(lambda: _BoundObjective(game), starts, cfg)
    best = int(np.argmax(f))
    vecs = [bloch_vector(v) for v in x[best]]
    # projection can overshoot the unit norm by an ulp
    vecs = [BlochVector(*(np.asarray(v) / max(1.0, v.norm()))) for v in vecs]
    return discrimination_bound(DiscriminationInstance(tuple(vecs), game))


def case_maxima(variant: Variant, cfg: OptimConfig = OptimConfig()) -> dict[int, float]:
    """Best closed-form bound found among restarts, grouped by D_max of the end point.

    Exploratory: the search maximizes the bound, so classes other than the
    optimum's are only sampled at whatever local maxima the restarts reach.
    """
    game = BUILTIN_GAMES["game32" if variant == "uniform" else "b32"]
    starts = np.stack([restart_rng(cfg.seed, k).normal(size=(3, 3)) for k in range(cfg.restarts)])
    x, f, _ = run_restarts(lambda: _BoundObjective(game), starts, cfg)
    out: dict[int, float] = {}
    for row, val in zip(x, f):
        vecs = [np.asarray(v) / max(1.0, float(np.linalg.norm(v))) for v in row]
        k = dmax_classify(vecs, variant)
        out[k] = max(out.get(k, -math.inf), float(val))
    return dict(sorted(out.items()))
