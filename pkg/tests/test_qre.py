import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lori.qre import ContinuationError, MixedProfile, NormalFormGame, QreParams, expected_costs, logit_response, solve_qre

from oracles import damped_fixed_point, expected_cost_loop


def random_game(rng, n_players, max_strats=4, scale=1.0):
    shape = tuple(int(rng.integers(2, max_strats + 1)) for _ in range(n_players))
    return NormalFormGame([scale * rng.random(shape) for _ in range(n_players)])


def residual(game, profile, alpha):
    return max(np.max(np.abs(profile[i] - logit_response(game, profile, i, alpha))) for i in range(game.n_players))


def test_alpha_zero_is_uniform(rng):
    game = random_game(rng, 3)
    res = solve_qre(game, QreParams(target_alpha=0.0))
    for v, k in zip(res.profile.vectors, game.shape):
        assert np.array_equal(v, np.full(k, 1.0 / k))


def test_logit_two_paths():
    game = NormalFormGame([np.array([1.0, 2.0])])
    pi = logit_response(game, MixedProfile([np.array([0.5, 0.5])]), 0, 1.0)
    assert pi == pytest.approx([np.e ** -1 / (np.e ** -1 + np.e ** -2), np.e ** -2 / (np.e ** -1 + np.e ** -2)], abs=1e-15)
    assert pi == pytest.approx([0.7311, 0.2689], abs=1e-4)
    assert logit_response(game, MixedProfile([pi]), 0, 0.0) == pytest.approx([0.5, 0.5])


def test_logit_limit():
    game = NormalFormGame([np.array([1.0, 2.0, 3.0])])
    pi = logit_response(game, MixedProfile.uniform(game), 0, 1e3)
    assert pi[0] >= 1 - 1e-6


def test_positive_sign_ablation_prefers_costly():
    game = NormalFormGame([np.array([1.0, 2.0])])
    res = solve_qre(game, QreParams(target_alpha=1.0, logit_sign=1.0))
    assert res.profile[0][1] > res.profile[0][0]


def test_symmetric_game_stays_uniform():
    a = np.array([[1.0, -1.0], [-1.0, 1.0]])
    game = NormalFormGame([a, -a])
    res = solve_qre(game, QreParams(target_alpha=8.0))
    for _, x in res.trace:
        assert np.max(np.abs(x - 0.5)) < 1e-9
    assert residual(game, res.profile, 8.0) < 1e-6


def test_single_player_is_direct_softmax():
    game = NormalFormGame([np.array([0.3, 1.2, 0.9])])
    res = solve_qre(game, QreParams(target_alpha=2.5))
    oracle, ok = damped_fixed_point(game.costs, 2.5)
    assert ok
    assert np.max(np.abs(res.profile[0] - oracle[0])) < 1e-8


def test_expected_costs_match_enumeration(rng):
    game = random_game(rng, 3)
    prof = MixedProfile([rng.dirichlet(np.ones(k)) for k in game.shape])
    for i in range(3):
        assert np.allclose(expected_costs(game, prof, i), expected_cost_loop(game.costs, prof.vectors, i), atol=1e-12)


def test_monte_carlo_contraction_for_many_players(rng):
    shape = (2,) * 7
    costs = [rng.random(shape) for _ in range(7)]
    game = NormalFormGame(costs)
    prof = MixedProfile([np.full(2, 0.5)] * 7)
    mc = expected_costs(game, prof, 0, QreParams(mc_samples=4096, seed=3))
    exact = expected_cost_loop(costs, prof.vectors, 0)
    assert np.max(np.abs(mc - exact)) < 0.05
    res = solve_qre(game, QreParams(target_alpha=2.0))
    assert all(abs(v.sum() - 1) < 1e-9 for v in res.profile.vectors)


def test_trace_is_continuous(rng):
    game = random_game(rng, 2, scale=2.0)
    p = QreParams(target_alpha=10.0)
    res = solve_qre(game, p)
    alphas = [a for a, _ in res.trace]
    assert alphas[0] == 0.0 and alphas[-1] == 10.0
    assert all(b > a for a, b in zip(alphas, alphas[1:]))
    for (_, x), (_, y) in zip(res.trace, res.trace[1:]):
        assert np.max(np.abs(x - y)) <= p.max_profile_step + 1e-12


def test_warm_start_reaches_same_equilibrium(rng):
    game = random_game(rng, 2)
    p = QreParams(target_alpha=5.0)
    cold = solve_qre(game, p)
    warm = solve_qre(game, p, warm_start=cold.profile)
    assert np.max(np.abs(cold.profile.flat() - warm.profile.flat())) < 1e-9


def test_continuation_error_carries_last_point():
    err = ContinuationError(1.5, MixedProfile([np.array([1.0])]))
    assert err.alpha == 1.5 and "1.5" in str(err)


def test_game_validation():
    with pytest.raises(ValueError):
        NormalFormGame([np.zeros((2, 2)), np.zeros((2, 3))])
    with pytest.raises(ValueError):
        NormalFormGame([np.zeros((2, 2))])
    with pytest.raises(ValueError):
        NormalFormGame([np.array([np.inf, 1.0])])
    with pytest.raises(ValueError):
        QreParams(target_alpha=-1.0)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 3), alpha=st.floats(0.1, 6.0))
def test_residual_small_on_random_games(seed, n, alpha):
    game = random_game(np.random.default_rng(seed), n)
    res = solve_qre(game, QreParams(target_alpha=alpha))
    assert residual(game, res.profile, alpha) < 1e-6


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), shift=st.floats(-50, 50))
def test_shift_invariance(seed, shift):
    rng = np.random.default_rng(seed)
    game = random_game(rng, 2)
    prof = MixedProfile([rng.dirichlet(np.ones(k)) for k in game.shape])
    shifted = NormalFormGame([game.costs[0] + shift, game.costs[1]])
    a = logit_response(game, prof, 0, 3.0)
    b = logit_response(shifted, prof, 0, 3.0)
    assert np.max(np.abs(a - b)) < 1e-12
