import itertools
import math

import pytest

from pairhedge.errors import InputError, ScaleGuardError
from pairhedge.pricing import (PriceQuery, horizon_for_tolerance, log_price, pairs_hedge_cost,
                               price, price_upper_bound, regret_bound)


def direct_pairs_price(T):
    # plain float summation, independent of the log-space code
    return math.fsum(math.comb(T, n) * (n / T) ** n * (1 - n / T) ** (T - n) for n in range(T + 1))


def path_enumeration_price(T, s):
    total = []
    for path in itertools.product(range(s), repeat=T):
        counts = [path.count(i) for i in range(s)]
        total.append(math.prod((c / T) ** c for c in counts))
    return math.fsum(total)


@pytest.mark.parametrize("T,s,expected", [(1, 2, 2.0), (2, 2, 2.5), (1, 3, 3.0), (1, 5, 5.0),
                                          (5, 1, 1.0), (100, 1, 1.0)])
def test_price_examples(T, s, expected):
    assert price(PriceQuery(T, s)).value == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("T,s,m,expected", [(1, 2, 2, 2.0), (2, 2, 3, 7.5), (4, 1, 5, 5.0)])
def test_pairs_hedge_cost_examples(T, s, m, expected):
    assert pairs_hedge_cost(PriceQuery(T, s, m)).value == pytest.approx(expected, rel=1e-12)


def test_log_space_matches_direct_sum():
    for T in range(1, 501):
        assert math.exp(log_price(T, 2)) == pytest.approx(direct_pairs_price(T), rel=1e-10), T


@pytest.mark.parametrize("s", [2, 3])
@pytest.mark.parametrize("T", range(1, 13))
def test_compositions_match_path_enumeration(T, s):
    if s ** T > 600_000:
        pytest.skip("enumeration too large")
    assert math.exp(log_price(T, s)) == pytest.approx(path_enumeration_price(T, s), rel=1e-10)


def test_convolution_path_for_larger_support():
    for T in range(1, 8):
        assert math.exp(log_price(T, 4)) == pytest.approx(path_enumeration_price(T, 4), rel=1e-10)
    assert math.exp(log_price(20, 6)) > math.exp(log_price(20, 5))


def test_large_support_guard():
    with pytest.raises(ScaleGuardError, match="infeasible"):
        log_price(21, 4)


def test_price_monotone_in_support():
    for T in (1, 3, 10, 20):
        values = [log_price(T, s) for s in range(1, 7)]
        assert values == sorted(values)


def test_upper_bound_examples():
    assert price_upper_bound(1) == pytest.approx(2 * math.sqrt(2))
    assert price_upper_bound(3) == 4.0
    assert price_upper_bound(99) == 20.0
    assert math.exp(log_price(1, 2)) <= price_upper_bound(1)


def test_large_horizon_stays_finite():
    lp = log_price(10**7, 2)
    assert math.isfinite(lp) and lp <= math.log(price_upper_bound(10**7))
    assert math.isfinite(log_price(2000, 3))


def test_regret_bound_examples():
    assert regret_bound(PriceQuery(1, 2, 2)) == pytest.approx(math.log(2))
    assert regret_bound(PriceQuery(2, 2, 2)) == pytest.approx(math.log(2.5) / 2)
    assert regret_bound(PriceQuery(100, 2, 30)) < regret_bound(PriceQuery(10, 2, 30))


def test_regret_bound_strictly_decreasing():
    for m in (2, 5, 30):
        b = [regret_bound(PriceQuery(T, 2, m)) for T in range(2, 1001)]
        assert all(x > y for x, y in zip(b, b[1:]))


def test_regret_bound_needs_pairs():
    with pytest.raises(InputError):
        regret_bound(PriceQuery(5, 3, 4))


@pytest.mark.parametrize("eps,m,expected", [(10.0, 2, 1), (0.5, 2, 2)])
def test_horizon_examples(eps, m, expected):
    assert horizon_for_tolerance(eps, m) == expected


@pytest.mark.parametrize("eps", [0.5, 0.2, 0.1, 0.05, 0.01])
@pytest.mark.parametrize("m", [2, 3, 10, 100])
def test_horizon_is_minimal(eps, m):
    T = horizon_for_tolerance(eps, m)
    assert regret_bound(PriceQuery(T, 2, m)) < eps
    if T > 1:
        assert regret_bound(PriceQuery(T - 1, 2, m)) >= eps


@pytest.mark.parametrize("bad", [(0, 2, 2), (3, 0, 2), (3, 3, 2), (2.5, 2, 2)])
def test_query_validation(bad):
    with pytest.raises(InputError):
        PriceQuery(*bad)


def test_price_rejects_mixed_universe():
    with pytest.raises(InputError):
        price(PriceQuery(3, 2, 5))


def test_horizon_rejects_bad_epsilon():
    with pytest.raises(InputError):
        horizon_for_tolerance(0.0, 3)
