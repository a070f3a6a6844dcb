import itertools
import math
import time
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ssgames.games import BUILTIN_GAMES, GameSpec, Strategy, serialize_strategy, win_rate
from ssgames.gates import BitFlip, EraseTo, GateClass, Identity, gate_in_class
from ssgames.optimize import (
    BlockProblem,
    OptimConfig,
    SearchSpaceTooLarge,
    coordinate_ascent,
    exhaustive_classical,
    optimize_channel,
    optimize_unitary,
    restart_rng,
    run_restarts,
)

TSIRELSON = 0.5 + math.sqrt(2) / 4

CLASSICAL_TABLE = {
    ("chsh_star", False): Fraction(3, 4),
    ("chsh_star", True): Fraction(1),
    ("ei_chsh_star", False): Fraction(3, 4),
    ("ei_chsh_star", True): Fraction(3, 4),
    ("game32", False): Fraction(7, 9),
    ("game32", True): Fraction(7, 9),
    ("b32", False): Fraction(4, 5),
    ("b32", True): Fraction(13, 15),
}


@pytest.fixture(scope="module")
def unitary_results():
    cfg = OptimConfig(restarts=64, seed=42)
    return {name: optimize_unitary(g, cfg) for name, g in BUILTIN_GAMES.items()}


@pytest.fixture(scope="module")
def channel_results():
    cfg = OptimConfig(restarts=8, seed=42)
    return {name: optimize_channel(g, cfg) for name, g in BUILTIN_GAMES.items()}


@pytest.mark.parametrize("name, irreversible", sorted(CLASSICAL_TABLE))
def test_exhaustive_classical_table(name, irreversible):
    res = exhaustive_classical(BUILTIN_GAMES[name], irreversible)
    assert res.best_rate == CLASSICAL_TABLE[name, irreversible]
    assert isinstance(res.best_rate, Fraction)
    assert win_rate(BUILTIN_GAMES[name], res.strategy) == res.best_rate
    cls = GateClass.CLASSICAL_IRREVERSIBLE if irreversible else GateClass.CLASSICAL_REVERSIBLE
    assert res.strategy.claimed_class is cls
    assert res.evaluations == (4 if irreversible else 2) ** (
        BUILTIN_GAMES[name].n_alice + BUILTIN_GAMES[name].n_bob
    )


def test_exhaustive_classical_is_fast():
    start = time.perf_counter()
    for name, irreversible in CLASSICAL_TABLE:
        exhaustive_classical(BUILTIN_GAMES[name], irreversible)
    assert time.perf_counter() - start < 1.0


def test_exhaustive_tie_break_is_lexicographic_first():
    # every strategy wins this game, so the first one (all identity) is returned
    g = GameSpec("all", 2, 2, ((Fraction(1, 4),) * 2,) * 2, ((frozenset({0, 1}),) * 2,) * 2)
    res = exhaustive_classical(g, irreversible=True)
    assert res.strategy.alice == (Identity(), Identity())
    assert res.strategy.bob == (Identity(), Identity())
    # all-identity already reaches 3/4 on CHSH*, and it comes first
    res = exhaustive_classical(BUILTIN_GAMES["chsh_star"], irreversible=False)
    assert res.strategy.alice + res.strategy.bob == (Identity(),) * 4


def test_exhaustive_matches_brute_force_enumeration():
    game = BUILTIN_GAMES["b32"]
    gates = [Identity(), BitFlip(), EraseTo(0), EraseTo(1)]
    best = max(
        win_rate(game, Strategy(c[:3], c[3:], GateClass.CLASSICAL_IRREVERSIBLE))
        for c in itertools.product(gates, repeat=6)
    )
    assert best == exhaustive_classical(game, irreversible=True).best_rate


def test_search_space_too_large():
    n = 7
    g = GameSpec("big", n, n, ((Fraction(1, n * n),) * n,) * n, ((frozenset({0}),) * n,) * n)
    with pytest.raises(SearchSpaceTooLarge):
        exhaustive_classical(g, irreversible=True)
    exhaustive_classical(GameSpec("small", 2, 2, ((Fraction(1, 4),) * 2,) * 2, ((frozenset({0}),) * 2,) * 2), True)


def test_optim_config_validation():
    OptimConfig()
    for bad in (dict(restarts=0), dict(max_iters=0), dict(convergence_tol=0), dict(step_init=-1), dict(seed=-1)):
        with pytest.raises(ValueError):
            OptimConfig(**bad)


def test_restart_rng_is_order_independent():
    a = [restart_rng(5, k).normal() for k in range(4)]
    b = [restart_rng(5, k).normal() for k in reversed(range(4))][::-1]
    assert a == b
    assert restart_rng(5, 0).normal() != restart_rng(6, 0).normal()


def test_unitary_search_values(unitary_results):
    r = unitary_results
    assert r["chsh_star"].best_rate >= TSIRELSON - 1e-4
    assert r["ei_chsh_star"].best_rate >= TSIRELSON - 1e-4
    assert r["game32"].best_rate >= 5 / 6 - 1e-6
    assert 4 / 5 - 1e-4 <= r["b32"].best_rate <= 4 / 5 + 1e-6


def test_channel_search_values(channel_results):
    r = channel_results
    assert r["chsh_star"].best_rate >= 1 - 1e-6
    assert abs(r["game32"].best_rate - 5 / 6) <= 1e-4
    assert abs(r["b32"].best_rate - 13 / 15) <= 1e-4


def test_results_are_achievable(unitary_results, channel_results):
    for results in (unitary_results, channel_results):
        for name, res in results.items():
            assert abs(win_rate(BUILTIN_GAMES[name], res.strategy) - res.best_rate) <= 1e-12
            assert max(res.per_restart_rates) == pytest.approx(res.best_rate, abs=1e-12)


def test_returned_strategies_have_their_class(unitary_results, channel_results):
    for res in unitary_results.values():
        assert res.strategy.claimed_class is GateClass.QUANTUM_REVERSIBLE
        assert all(gate_in_class(g, GateClass.QUANTUM_REVERSIBLE) for g in res.strategy.alice + res.strategy.bob)
    for res in channel_results.values():
        assert res.strategy.claimed_class is GateClass.QUANTUM_IRREVERSIBLE


@pytest.mark.parametrize("name", sorted(BUILTIN_GAMES))
def test_class_monotonicity(name, unitary_results, channel_results):
    game = BUILTIN_GAMES[name]
    cr = exhaustive_classical(game, False).best_rate
    ci = exhaustive_classical(game, True).best_rate
    qr = unitary_results[name].best_rate
    qi = channel_results[name].best_rate
    assert cr <= ci
    assert cr <= qr + 1e-6
    assert qr <= qi + 1e-6
    assert ci <= qi + 1e-6


@pytest.mark.parametrize("threads", ["1", "2", "3"])
def test_unitary_search_ignores_thread_count(threads, monkeypatch):
    cfg = OptimConfig(restarts=10, seed=3)
    game = BUILTIN_GAMES["game32"]
    monkeypatch.delenv("SSG_THREADS", raising=False)
    monkeypatch.setenv("SSG_THREADS", "1")
    ref = optimize_unitary(game, cfg)
    monkeypatch.setenv("SSG_THREADS", threads)
    res = optimize_unitary(game, cfg)
    assert res.best_rate == ref.best_rate
    assert res.per_restart_rates == ref.per_restart_rates
    assert res.evaluations == ref.evaluations
    assert serialize_strategy(res.strategy) == serialize_strategy(ref.strategy)


def test_channel_search_ignores_thread_count(monkeypatch):
    cfg = OptimConfig(restarts=3, seed=9, max_iters=40)
    game = BUILTIN_GAMES["chsh_star"]
    out = []
    for threads in ("1", "4"):
        monkeypatch.setenv("SSG_THREADS", threads)
        res = optimize_channel(game, cfg)
        out.append((res.best_rate, res.per_restart_rates, serialize_strategy(res.strategy)))
    assert out[0] == out[1]


def test_same_seed_same_result():
    cfg = OptimConfig(restarts=6, seed=1)
    a = optimize_unitary(BUILTIN_GAMES["b32"], cfg)
    b = optimize_unitary(BUILTIN_GAMES["b32"], cfg)
    assert a.per_restart_rates == b.per_restart_rates
    assert serialize_strategy(a.strategy) == serialize_strategy(b.strategy)


@st.composite
def two_by_two_games(draw):
    weights = [draw(st.integers(0, 12)) for _ in range(4)]
    if not any(weights):
        weights[0] = 1
    total = sum(weights)
    prior = ((Fraction(weights[0], total), Fraction(weights[1], total)),
             (Fraction(weights[2], total), Fraction(weights[3], total)))
    out = st.sampled_from([frozenset({0}), frozenset({1})])
    win = tuple(tuple(draw(out) for _ in range(2)) for _ in range(2))
    return GameSpec("rand", 2, 2, prior, win)


@settings(max_examples=40, deadline=None)
@given(two_by_two_games())
def test_x_rotation_grid_reproduces_classical_reversible(game):
    grid = optimize_unitary(game, angles=(0.0, math.pi))
    exact = exhaustive_classical(game, irreversible=False).best_rate
    assert abs(grid.best_rate - float(exact)) <= 1e-9


@settings(max_examples=15, deadline=None)
@given(two_by_two_games())
def test_unitary_search_dominates_classical_reversible(game):
    res = optimize_unitary(game, OptimConfig(restarts=4, seed=0))
    assert res.best_rate >= float(exhaustive_classical(game, irreversible=False).best_rate) - 1e-9


class _Quadratic(BlockProblem):
    n_blocks = 2
    block_size = 2

    def features(self, i, xb):
        return xb

    def value(self, feats):
        target = np.array([[1.0, -2.0], [0.5, 3.0]])
        return -sum(np.sum((f - t) ** 2, axis=1) for f, t in zip(feats, target))


def test_coordinate_ascent_finds_quadratic_maximum():
    x0 = np.random.default_rng(0).normal(size=(5, 2, 2)) * 4
    x, f, evals = coordinate_ascent(_Quadratic(), x0, OptimConfig(restarts=5))
    assert np.allclose(x, [[1.0, -2.0], [0.5, 3.0]], atol=1e-8)
    # gains under the minimum improvement are not taken
    assert np.all(f > -1e-12)
    assert evals > 0


def test_run_restarts_matches_single_batch(monkeypatch):
    x0 = np.random.default_rng(1).normal(size=(7, 2, 2))
    cfg = OptimConfig(restarts=7, max_iters=5)
    monkeypatch.setenv("SSG_THREADS", "1")
    a = run_restarts(_Quadratic, x0, cfg)
    monkeypatch.setenv("SSG_THREADS", "3")
    b = run_restarts(_Quadratic, x0, cfg)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1]) and a[2] == b[2]
