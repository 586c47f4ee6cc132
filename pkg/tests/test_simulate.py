import math

import numpy as np
import pytest

from pairhedge.errors import InputError
from pairhedge.hindsight import best_pairs_rule_overall, best_s_rule
from pairhedge.simulate import (GbmPairSpec, HorseRaceSpec, LogNormalSpec, make_rng,
                                simulate_horse_race, simulate_lognormal, simulate_shannon_demon)


def test_streams_are_independent_and_reproducible():
    a = make_rng(5, 0).standard_normal(4)
    assert np.array_equal(a, make_rng(5, 0).standard_normal(4))
    assert not np.array_equal(a, make_rng(5, 1).standard_normal(4))


def test_demon_shape_and_diagnostics():
    spec = GbmPairSpec(dt=0.01, horizon=5.0, seed=3)
    seq, diag = simulate_shannon_demon(spec, stream=2)
    assert seq.returns.shape == (500, 2)
    assert diag.theory_growth == pytest.approx(math.log(2) ** 2 / 4)
    x = seq.returns
    assert diag.rebalanced_growth == pytest.approx(np.log(x.mean(axis=1)).sum() / 5.0)
    assert diag.stock_growth[0] == pytest.approx(np.log(x[:, 0]).sum() / 5.0)
    again, _ = simulate_shannon_demon(spec, stream=2)
    assert np.array_equal(x, again.returns)


def test_demon_without_volatility_is_flat():
    seq, diag = simulate_shannon_demon(GbmPairSpec(sigma=0.0, horizon=1.0))
    assert np.all(seq.returns == 1.0)
    assert diag.rebalanced_growth == 0.0


def test_demon_growth_is_positive_on_average():
    g = [simulate_shannon_demon(GbmPairSpec(horizon=200.0, seed=1), k)[1].rebalanced_growth
         for k in range(20)]
    assert 0.08 < np.mean(g) < 0.16


def test_demon_spec_validation():
    with pytest.raises(InputError):
        GbmPairSpec(dt=0.0)


def test_lognormal_constant_without_volatility():
    seq = simulate_lognormal(LogNormalSpec((0.1, -0.2, 0.0), (0.0, 0.0, 0.0), T=6))
    assert seq.returns == pytest.approx(np.tile(np.exp([0.1, -0.2, 0.0]), (6, 1)))


def test_lognormal_identity_correlation():
    T = 4000
    seq = simulate_lognormal(LogNormalSpec((0.0,) * 4, (0.3,) * 4, T=T, seed=9))
    c = np.corrcoef(np.log(seq.returns).T)
    off = c[~np.eye(4, dtype=bool)]
    assert np.all(np.abs(off) < 4 / math.sqrt(T))


def test_lognormal_target_correlation():
    corr = np.array([[1.0, 0.8], [0.8, 1.0]])
    seq = simulate_lognormal(LogNormalSpec((0.0, 0.0), (1.0, 2.0), T=20000, corr=corr, seed=1))
    logs = np.log(seq.returns)
    assert np.corrcoef(logs.T)[0, 1] == pytest.approx(0.8, abs=0.02)
    assert logs.std(axis=0) == pytest.approx([1.0, 2.0], rel=0.03)


def test_lognormal_rejects_bad_correlation():
    with pytest.raises(InputError, match="semidefinite"):
        simulate_lognormal(LogNormalSpec((0, 0, 0), (1, 1, 1), 5,
                                         np.array([[1, .9, -.9], [.9, 1, .9], [-.9, .9, 1]])))
    with pytest.raises(InputError):
        simulate_lognormal(LogNormalSpec((0, 0), (1, 1), 5, np.array([[1, .2], [.3, 1]])))


def test_lognormal_seeded():
    spec = LogNormalSpec((0.0, 0.01), (0.2, 0.3), T=50, seed=4)
    assert np.array_equal(simulate_lognormal(spec).returns, simulate_lognormal(spec).returns)


def test_horse_race_deterministic_path():
    seq = simulate_horse_race(HorseRaceSpec(m=3, T=4, path=(2, 0, 0, 1)))
    assert seq.returns.tolist() == [[0, 0, 1], [1, 0, 0], [1, 0, 0], [0, 1, 0]]


def test_horse_race_draws_and_odds():
    seq = simulate_horse_race(HorseRaceSpec(m=4, T=200, win_probs=(0.1, 0.2, 0.3, 0.4),
                                            odds=3.0, seed=2))
    x = seq.returns
    assert np.all((x > 0).sum(axis=1) == 1)
    assert set(np.unique(x)) == {0.0, 3.0}


def test_horse_race_third_winner_bankrupts_pairs():
    seq = simulate_horse_race(HorseRaceSpec(m=3, T=5, path=(0, 1, 1, 0, 2)))
    assert best_pairs_rule_overall(seq.returns)[1].wealth == 0.0


def test_single_horse():
    odds = np.array([[1.5], [2.0], [0.5]])
    seq = simulate_horse_race(HorseRaceSpec(m=1, T=3, path=(0, 0, 0), odds=odds))
    assert seq.returns[:, 0].tolist() == [1.5, 2.0, 0.5]
    assert best_s_rule(seq.returns, 1).wealth == pytest.approx(1.5)


def test_horse_race_validation():
    with pytest.raises(InputError):
        simulate_horse_race(HorseRaceSpec(m=2, T=2, win_probs=(0.7, 0.7)))
    with pytest.raises(InputError):
        simulate_horse_race(HorseRaceSpec(m=2, T=2, path=(0, 2)))
    with pytest.raises(InputError):
        simulate_horse_race(HorseRaceSpec(m=2, T=2, odds=-1.0))
