import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ssgames.bounds import (
    BadPriors,
    DiscriminationInstance,
    PreconditionViolated,
    bound_32_form,
    case_maxima,
    discrimination_bound,
    dmax_classify,
    game_variant,
    gram_identity_check,
    helstrom_bound,
    maximize_discrimination_bound,
)
from ssgames.games import BUILTIN_GAMES, GameSpec, Strategy, named_strategy, win_rate
from ssgames.gates import (
    N_CHANNEL_PARAMS,
    BitFlip,
    EraseTo,
    Identity,
    apply_gate,
    channel_from_params,
    unitary_from_rotvec,
)
from ssgames.optimize import OptimConfig, optimize_channel, optimize_unitary
from ssgames.qubit_core import (
    ONE_STATE,
    ZERO_STATE,
    OutsideBlochBall,
    bloch_to_density,
    pauli,
    trace_norm,
)

I, X, Y, Z = (pauli(p) for p in "IXYZ")
S3 = math.sqrt(3) / 2
TRIANGLE = [(1, 0, 0), (-0.5, S3, 0), (-0.5, -S3, 0)]


def random_ball(rng, n):
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * rng.uniform(0, 1, size=(n, 1)) ** (1 / 3)


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q *= np.sign(np.diag(r))
    return q if np.linalg.det(q) > 0 else -q


def alice_states(strategy):
    return [apply_gate(ZERO_STATE, g).bloch() for g in strategy.alice]


@pytest.fixture(scope="module")
def maxima():
    cfg = OptimConfig(restarts=32, seed=42)
    return {name: maximize_discrimination_bound(g, cfg) for name, g in BUILTIN_GAMES.items()}


def test_helstrom_examples():
    assert helstrom_bound(ZERO_STATE, ONE_STATE, 0.5, 0.5) == pytest.approx(1, abs=1e-15)
    rho = bloch_to_density((0.2, 0.1, -0.4))
    assert helstrom_bound(rho, rho, 1 / 3, 2 / 3) == pytest.approx(2 / 3, abs=1e-15)
    plus = bloch_to_density((1, 0, 0))
    assert helstrom_bound(ZERO_STATE, plus, 0.5, 0.5) == pytest.approx(0.5 + math.sqrt(2) / 4, abs=1e-15)


def test_helstrom_rejects_bad_priors():
    with pytest.raises(BadPriors):
        helstrom_bound(ZERO_STATE, ONE_STATE, 0.5, 0.6)
    with pytest.raises(BadPriors):
        helstrom_bound(ZERO_STATE, ONE_STATE, -0.5, 1.5)


def test_discrimination_bound_examples():
    game32, b32 = BUILTIN_GAMES["game32"], BUILTIN_GAMES["b32"]
    res = discrimination_bound(DiscriminationInstance(((0, 0, 0),) * 3, game32))
    assert res.upper_bound == pytest.approx(2 / 3, abs=1e-15)
    assert res.dmax == 3
    res = discrimination_bound(DiscriminationInstance(tuple(TRIANGLE), game32))
    assert res.upper_bound == pytest.approx(5 / 6, abs=1e-12)
    assert res.dmax == 0
    res = discrimination_bound(DiscriminationInstance(((0, 0, -1), (0, 0, 1), (0, 0, 1)), b32))
    assert res.upper_bound == pytest.approx(13 / 15, abs=1e-12)
    assert res.dmax == 2


def test_discrimination_bound_of_named_strategies_states():
    # the bound at a strategy's own states is at least its rate, with equality here
    for name, game in (("game32_quantum_56", "game32"), ("b32_irreversible_1315", "b32")):
        s = named_strategy(name)
        inst = DiscriminationInstance(tuple(alice_states(s)), BUILTIN_GAMES[game])
        assert discrimination_bound(inst).upper_bound == pytest.approx(float(win_rate(BUILTIN_GAMES[game], s)), abs=1e-12)


def test_discrimination_instance_validation():
    with pytest.raises(ValueError):
        DiscriminationInstance(((0, 0, 0),) * 2, BUILTIN_GAMES["game32"])
    with pytest.raises(OutsideBlochBall):
        DiscriminationInstance(((0, 0, 1.1), (0, 0, 0), (0, 0, 0)), BUILTIN_GAMES["game32"])


def test_bound_32_form_examples():
    res = bound_32_form(TRIANGLE, "uniform")
    assert res.upper_bound == pytest.approx(5 / 6, abs=1e-12)
    assert res.dmax == 0
    v = (0.6, 0.0, 0.8)
    assert bound_32_form([v, v, v], "uniform").upper_bound == pytest.approx(2 / 3, abs=1e-12)
    res = bound_32_form([(0, 0, -1), (0, 0, 1), (0, 0, 1)], "biased")
    assert res.upper_bound == pytest.approx(13 / 15, abs=1e-12)
    assert res.dmax == 2
    with pytest.raises(OutsideBlochBall):
        bound_32_form([(2, 0, 0), (0, 0, 0), (0, 0, 0)])


def test_dmax_examples():
    assert dmax_classify(TRIANGLE, "uniform") == 0
    assert dmax_classify([(0, 0, 0)] * 3, "uniform") == 3
    # r_0 and r_1 have norm exactly 3, r_2 = 0
    assert dmax_classify([(0, 0, 1), (0, 0, -1), (0, 0, 0)], "biased") == 1


def test_game_variant():
    assert game_variant(BUILTIN_GAMES["game32"]) == "uniform"
    assert game_variant(BUILTIN_GAMES["b32"]) == "biased"
    assert game_variant(BUILTIN_GAMES["chsh_star"]) is None
    assert discrimination_bound(DiscriminationInstance(((0, 0, 1), (0, 0, 1)), BUILTIN_GAMES["chsh_star"])).dmax is None


@pytest.mark.parametrize("variant, game", [("uniform", "game32"), ("biased", "b32")])
def test_closed_form_equals_eigenvalue_route_1000_triples(variant, game):
    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(1000):
        vs = random_ball(rng, 3)
        direct = discrimination_bound(DiscriminationInstance(tuple(map(tuple, vs)), BUILTIN_GAMES[game]))
        closed = bound_32_form(vs, variant)
        worst = max(worst, abs(direct.upper_bound - closed.upper_bound))
        worst = max(worst, *(abs(a - b) for a, b in zip(direct.per_b_terms, closed.per_b_terms)))
        assert direct.dmax == closed.dmax
    assert worst <= 1e-12


@pytest.mark.parametrize("threshold", [1, 3])
def test_threshold_trace_norm_form(threshold):
    rng = np.random.default_rng(threshold)
    worst = 0.0
    for _ in range(1000):
        r = rng.normal(size=3)
        r *= rng.uniform(0, 2 * threshold + 1) / np.linalg.norm(r)
        m = (-threshold * I + r[0] * X + r[1] * Y + r[2] * Z) / 2
        worst = max(worst, abs(trace_norm(m) - max(threshold, np.linalg.norm(r))))
    assert worst <= 1e-12


@st.composite
def binary_games(draw, n_alice, n_bob):
    weights = [draw(st.integers(0, 9)) for _ in range(n_alice * n_bob)]
    if not any(weights):
        weights[0] = 1
    total = sum(weights)
    it = iter(weights)
    prior = tuple(tuple(Fraction(next(it), total) for _ in range(n_bob)) for _ in range(n_alice))
    cell = st.sampled_from([frozenset({0}), frozenset({1})])
    win = tuple(tuple(draw(cell) for _ in range(n_bob)) for _ in range(n_alice))
    return GameSpec("rand", n_alice, n_bob, prior, win)


@st.composite
def ball_vector(draw):
    v = np.array([draw(st.floats(-1, 1)) for _ in range(3)])
    n = np.linalg.norm(v)
    return tuple(v / n) if n > 1 else tuple(v)


@given(binary_games(2, 3), ball_vector(), ball_vector())
def test_two_input_bound_is_sum_of_helstrom_terms(game, v0, v1):
    rhos = [bloch_to_density(v0), bloch_to_density(v1)]
    expected = 0.0
    for b in range(game.n_bob):
        p = [float(game.prior[a][b]) for a in range(2)]
        total = p[0] + p[1]
        if total == 0:
            continue
        if game.win[0][b] == game.win[1][b]:
            expected += total
        else:
            # the state whose winning output is 0 is the first hypothesis
            first = 0 if game.wins(0, b, 0) else 1
            second = 1 - first
            expected += total * helstrom_bound(rhos[first], rhos[second], p[first] / total, p[second] / total)
    got = discrimination_bound(DiscriminationInstance((v0, v1), game)).upper_bound
    assert abs(got - expected) <= 1e-12


@given(binary_games(3, 2), ball_vector(), ball_vector(), ball_vector())
def test_bound_dominates_prior_only_guessing(game, v0, v1, v2):
    res = discrimination_bound(DiscriminationInstance((v0, v1, v2), game))
    guess = sum(
        max(
            sum(game.prior[a][b] for a in range(3) if game.wins(a, b, 0)),
            sum(game.prior[a][b] for a in range(3) if game.wins(a, b, 1)),
        )
        for b in range(2)
    )
    assert res.upper_bound >= float(guess) - 1e-12
    assert -1e-12 <= res.upper_bound <= 1 + 1e-12


any_gates = st.one_of(
    st.sampled_from([Identity(), BitFlip(), EraseTo(0), EraseTo(1)]),
    st.tuples(*(st.floats(-4, 4) for _ in range(3))).map(unitary_from_rotvec),
    st.lists(st.floats(-2, 2), min_size=N_CHANNEL_PARAMS, max_size=N_CHANNEL_PARAMS).map(channel_from_params),
)


@settings(max_examples=60)
@given(st.sampled_from(sorted(BUILTIN_GAMES)), st.data())
def test_bound_at_alice_states_dominates_any_bob(name, data):
    game = BUILTIN_GAMES[name]
    s = Strategy(
        data.draw(st.lists(any_gates, min_size=game.n_alice, max_size=game.n_alice)),
        data.draw(st.lists(any_gates, min_size=game.n_bob, max_size=game.n_bob)),
    )
    bound = discrimination_bound(DiscriminationInstance(tuple(alice_states(s)), game)).upper_bound
    assert float(win_rate(game, s)) <= bound + 1e-12


def test_maximized_bounds(maxima):
    assert abs(maxima["game32"].upper_bound - 5 / 6) <= 1e-6
    assert abs(maxima["b32"].upper_bound - 13 / 15) <= 1e-6
    assert maxima["chsh_star"].upper_bound >= 1 - 1e-6
    vs = np.array(maxima["game32"].argmax_vectors)
    assert np.linalg.norm(vs.sum(axis=0)) <= 1e-3
    for i in range(3):
        for j in range(i + 1, 3):
            assert vs[i] @ vs[j] == pytest.approx(-0.5, abs=1e-3)


def test_maximized_bound_is_reevaluated(maxima):
    for name, res in maxima.items():
        again = discrimination_bound(DiscriminationInstance(tuple(res.argmax_vectors), BUILTIN_GAMES[name]))
        assert again.upper_bound == res.upper_bound
        assert all(np.linalg.norm(v) <= 1 for v in res.argmax_vectors)


@pytest.mark.parametrize("name", sorted(BUILTIN_GAMES))
def test_found_strategies_respect_maximized_bound(name, maxima):
    game = BUILTIN_GAMES[name]
    cfg = OptimConfig(restarts=8, seed=5)
    for res in (optimize_unitary(game, cfg), optimize_channel(game, OptimConfig(restarts=2, seed=5, max_iters=300))):
        assert res.best_rate <= maxima[name].upper_bound + 1e-6
        assert max(res.per_restart_rates) <= maxima[name].upper_bound + 1e-6


def test_gram_identity_examples():
    assert gram_identity_check(TRIANGLE) == pytest.approx(-1.5, abs=1e-12)
    rot = random_rotation(np.random.default_rng(0))
    assert gram_identity_check([rot @ np.array(v) for v in TRIANGLE]) == pytest.approx(-1.5, abs=1e-12)


def test_gram_identity_random_triples():
    rng = np.random.default_rng(100)
    for _ in range(100):
        rot = random_rotation(rng)
        # any zero-sum unit triple is an equilateral triangle on a great circle
        vs = [rot @ np.array(v) for v in TRIANGLE]
        assert abs(gram_identity_check(vs) + 1.5) <= 1e-9


def test_gram_identity_preconditions():
    with pytest.raises(PreconditionViolated):
        gram_identity_check([(1, 0, 0), (0, 1, 0), (0, 0, 1)])
    with pytest.raises(PreconditionViolated):
        gram_identity_check([(0.5, 0, 0), (-0.5, 0, 0), (0, 0, 0)])
    with pytest.raises(PreconditionViolated):
        gram_identity_check(TRIANGLE[:2])


def test_case_maxima_never_exceed_the_optimum():
    cfg = OptimConfig(restarts=16, seed=1)
    for variant, top in (("uniform", 5 / 6), ("biased", 13 / 15)):
        cases = case_maxima(variant, cfg)
        assert set(cases) <= {0, 1, 2, 3}
        assert max(cases.values()) == pytest.approx(top, abs=1e-6)
        assert all(v <= top + 1e-9 for v in cases.values())
