"""The zero-sum trading game against nature, checked by exhaustive enumeration.

The trader's payoff is ``W_theta / D_s``: final wealth over the wealth of the
best rebalancing rule with at most ``s`` stocks.  Horse race paths use unit
odds, ``x_t = e_{j_t}``.

Strategies are plain objects with ``start()``, ``weights(state)`` and
``update(state, x)``; an optional ``log_wealth(state)`` lets the strategy's
own wealth accounting be checked instead of the product of growth factors.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .aggregator import AggregateStrategy
from .errors import InputError, ScaleGuardError
from .hindsight import best_s_rule, horse_race_log_hindsight
from .pricing import log_binom, log_price
from .uportfolio import PairStrategy, PathMixtureStrategy

MAX_PATHS = 10**7


@dataclass(frozen=True)
class HorseRacePath:
    winners: tuple[int, ...]
    odds: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.odds is not None:
            if len(self.odds) != len(self.winners):
                raise InputError("odds and winners differ in length")
            if any(o <= 0 for o in self.odds):
                raise InputError("odds must be positive")

    @property
    def T(self) -> int:
        return len(self.winners)

    def returns(self, m: int) -> np.ndarray:
        if any(not 0 <= j < m for j in self.winners):
            raise InputError(f"winner index outside 0..{m - 1}")
        x = np.zeros((self.T, m))
        x[np.arange(self.T), list(self.winners)] = 1.0 if self.odds is None else self.odds
        return x


@dataclass(frozen=True)
class GameValue:
    m: int
    s: int
    T: int
    lower_value: float
    upper_value: float = 1.0
    mixed_value: float = field(default=math.nan)
    checks: dict = field(default_factory=dict)

    def __post_init__(self):
        if math.isnan(self.mixed_value):
            object.__setattr__(self, "mixed_value", self.lower_value)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def game_value(m: int, s: int, T: int) -> float:
    """1 / (C(m, s) p(T, s))."""
    return math.exp(-(log_binom(m, s) + log_price(T, s)))


def _guard(m: int, T: int) -> None:
    if m ** T > MAX_PATHS:
        raise ScaleGuardError(f"{m}^{T} horse race paths exceed {MAX_PATHS}")


def _unit(m: int) -> np.ndarray:
    return np.eye(m)


def horse_race_log_wealths(strategy, m: int, T: int):
    """Yield ``(winners, log W)`` for every unit-odds path, by depth-first search.

    Wealth is the strategy's own ``log_wealth`` when it has one, otherwise the
    running sum of ``log theta_t[j_t]``.
    """
    _guard(m, T)
    unit = _unit(m)
    own = hasattr(strategy, "log_wealth")
    stack = [((), strategy.start(), 0.0)]
    while stack:
        path, state, lw = stack.pop()
        if len(path) == T:
            yield path, (strategy.log_wealth(state) if own else lw)
            continue
        if (strategy.log_wealth(state) if own else lw) == -math.inf:
            # wealth stays zero below a ruined node
            for rest in itertools.product(range(m), repeat=T - len(path)):
                yield path + rest, -math.inf
            continue
        theta = strategy.weights(state)
        for j in range(m - 1, -1, -1):
            step = math.log(theta[j]) if theta[j] > 0 else -math.inf
            stack.append((path + (j,), strategy.update(state, unit[j]), lw + step))


def wealth_conservation_check(strategy, m: int, T: int) -> float:
    """Sum of final wealth over all m**T unit-odds horse race paths (always 1)."""
    return math.fsum(math.exp(lw) for _, lw in horse_race_log_wealths(strategy, m, T))


def hindsight_on_path(path: HorseRacePath | tuple, s: int) -> float:
    """Best s-stock rule wealth on a unit-odds path: prod (n_i/T)**n_i, or 0."""
    winners = path.winners if isinstance(path, HorseRacePath) else tuple(path)
    if isinstance(path, HorseRacePath) and path.odds is not None:
        raise InputError("closed form holds for unit odds only")
    lw = horse_race_log_hindsight(winners, s)
    return math.exp(lw) if lw > -math.inf else 0.0


def payoff(log_w: float, log_d: float) -> float:
    """W / D, with ``inf`` where D = 0 (such paths are never played by nature)."""
    if log_d == -math.inf:
        return math.inf
    if log_w == -math.inf:
        return 0.0
    return math.exp(log_w - log_d)


def natures_mixed_strategy(m: int, s: int, T: int) -> dict[tuple[int, ...], float]:
    """Nature's equilibrium randomization over unit-odds horse race paths.

    Enumerates (support, path within the support) pairs and gives each
    ``D_s(path) / (C(m, s) p(T, s))``; a path with fewer than ``s`` distinct
    winners therefore collects one such term per support containing them.
    """
    if not 1 <= s <= m:
        raise InputError(f"need 1 <= s <= m, got s={s}, m={m}")
    if math.comb(m, s) * s ** T > MAX_PATHS:
        raise ScaleGuardError(f"C({m},{s}) * {s}^{T} support paths exceed {MAX_PATHS}")
    norm = log_binom(m, s) + log_price(T, s)
    probs: dict[tuple[int, ...], float] = {}
    for support in itertools.combinations(range(m), s):
        for path in itertools.product(support, repeat=T):
            p = math.exp(horse_race_log_hindsight(path, s) - norm)
            probs[path] = probs.get(path, 0.0) + p
    return probs


def expected_payoff(strategy, mixture: dict, m: int, T: int, s: int) -> float:
    """Expected W_theta / D_s when nature draws paths from ``mixture``."""
    terms = []
    for path, lw in horse_race_log_wealths(strategy, m, T):
        prob = mixture.get(path, 0.0)
        if prob > 0:
            terms.append(prob * payoff(lw, horse_race_log_hindsight(path, s)))
    return math.fsum(terms)


def distinct_path_price(m: int, s: int, T: int) -> float:
    """Sum of D_s over distinct unit-odds paths, each path counted once.

    This is the lower bound on any super-hedging deposit obtained by summing
    the hedge inequality over all horse race paths.
    """
    _guard(m, T)
    return math.fsum(math.exp(horse_race_log_hindsight(p, s))
                     for p in itertools.product(range(m), repeat=T)
                     if len(set(p)) <= s)


def superhedge_strategy(m: int, s: int, T: int):
    """The C(m, s) p(T, s) super-hedge: one universal engine per s-stock support.

    ``s = 2`` uses the pair engines; other supports fall back to an explicit
    path mixture whose weights are nature's equilibrium probabilities.
    """
    if s == 2 and m >= 2:
        return AggregateStrategy(m, T)
    mix = natures_mixed_strategy(m, s, T)
    paths = np.array(list(mix.keys()), dtype=np.int64).reshape(-1, T)
    with np.errstate(divide="ignore"):
        lw = np.log(np.array(list(mix.values())))
    return PathMixtureStrategy(paths, lw, m)


# --- comparison strategies ----------------------------------------------------


class ConstantRebalanced:
    def __init__(self, b):
        self.b = np.asarray(b, dtype=float)
        self.m = len(self.b)

    def start(self):
        return None

    def weights(self, state):
        return self.b

    def update(self, state, x):
        return None


class BuyAndHold:
    """Buy the initial portfolio once and let the holdings drift."""

    def __init__(self, b):
        self.b = np.asarray(b, dtype=float)
        self.m = len(self.b)

    def start(self):
        return (self.b.copy(), 0.0)

    def weights(self, state):
        return state[0]

    def update(self, state, x):
        hold, lw = state
        grown = hold * np.asarray(x, dtype=float)
        g = grown.sum()
        if g <= 0:
            return (self.b.copy(), -math.inf)
        return (grown / g, lw + math.log(g))

    def log_wealth(self, state):
        return state[1]


class RandomTreeStrategy:
    """Independent Dirichlet(1) portfolio at every node of the horse race tree.

    The node is keyed by the history of winning indices, and its portfolio is
    drawn from a generator seeded by ``(seed, *history)``.
    """

    def __init__(self, m: int, seed: int = 0):
        self.m, self.seed = m, seed

    def start(self):
        return ()

    def weights(self, state):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([self.seed, *state])))
        return rng.dirichlet(np.ones(self.m))

    def update(self, state, x):
        return state + (int(np.argmax(x)),)


def pure_value_check(m: int, s: int, T: int, strategies=None, n_sequences: int = 50,
                     seed: int = 0, tol: float = 1e-10) -> GameValue:
    """Check the pure-strategy bounds of the game.

    (a) the super-hedge's payoff is at least ``1 / (C(m,s) p(T,s))`` on every
    horse race path and on random return sequences; (b) on paths where one
    stock is best in every session, no tested strategy's payoff exceeds 1.
    """
    _guard(m, T)
    lower = game_value(m, s, T)
    hedge = superhedge_strategy(m, s, T)
    strategies = list(strategies or []) + [hedge]

    worst = math.inf
    for path, lw in horse_race_log_wealths(hedge, m, T):
        worst = min(worst, payoff(lw, horse_race_log_hindsight(path, s)))

    rng = np.random.Generator(np.random.Philox(seed))
    for _ in range(n_sequences):
        x = rng.lognormal(0.0, 0.5, size=(T, m))
        worst = min(worst, payoff(_run_log_wealth(hedge, x), best_s_rule(x, s).log_wealth))

    cap = -math.inf
    for j in range(m):
        for _ in range(max(1, n_sequences // m)):
            x = rng.uniform(0.0, 1.0, size=(T, m))
            x[:, j] = x.max(axis=1) + rng.uniform(0.0, 0.5, size=T)
            d = best_s_rule(x, s).log_wealth
            for strat in strategies:
                cap = max(cap, payoff(_run_log_wealth(strat, x), d))
        unit_path = (j,) * T
        for strat in strategies:
            cap = max(cap, payoff(_run_log_wealth(strat, HorseRacePath(unit_path).returns(m)), 0.0))

    checks = {
        "superhedge_guarantee": worst >= lower * (1 - tol),
        "single_winner_cap": cap <= 1.0 + tol,
        "no_pure_equilibrium": lower < 1.0,
    }
    return GameValue(m, s, T, lower, 1.0, lower, checks)


def _run_log_wealth(strategy, x) -> float:
    state = strategy.start()
    lw = 0.0
    for row in np.asarray(x, dtype=float):
        g = float(np.dot(strategy.weights(state), row))
        lw += math.log(g) if g > 0 else -math.inf
        state = strategy.update(state, row)
    return lw


def verify_game(m: int, s: int, T: int, n_random: int = 100, seed: int = 0) -> list[dict]:
    """Run the equilibrium checks for one game instance; one dict per property."""
    value = game_value(m, s, T)
    mix = natures_mixed_strategy(m, s, T)
    mass = math.fsum(mix.values())
    hedge = superhedge_strategy(m, s, T)
    hedge_payoff = expected_payoff(hedge, mix, m, T, s)
    rand = [expected_payoff(RandomTreeStrategy(m, seed + k), mix, m, T, s) for k in range(n_random)]
    pure = pure_value_check(m, s, T, [RandomTreeStrategy(m, seed + k) for k in range(3)], seed=seed)
    tag = f"game(m={m},s={s},T={T})"
    out = [
        {"name": f"{tag}.mixture_mass", "passed": abs(mass - 1.0) <= 1e-12,
         "value": mass, "expected": 1.0, "tolerance": 1e-12},
        {"name": f"{tag}.superhedge_expected_payoff", "passed": abs(hedge_payoff - value) <= 1e-10,
         "value": hedge_payoff, "expected": value, "tolerance": 1e-10},
        {"name": f"{tag}.random_strategies_capped", "passed": max(rand) <= value + 1e-10,
         "value": max(rand), "expected": value, "tolerance": 1e-10},
    ]
    for name, ok in pure.checks.items():
        out.append({"name": f"{tag}.{name}", "passed": bool(ok)})
    return out


def verify_conservation(m: int, T: int, seed: int = 0) -> list[dict]:
    """Wealth-conservation identity for every strategy implementation in the package."""
    strategies = {
        "aggregate": AggregateStrategy(m, T),
        "pair_engine": PairStrategy((0, 1), m, T),
        "buy_and_hold": BuyAndHold(np.full(m, 1.0 / m)),
        "constant_rebalanced": ConstantRebalanced(np.arange(1, m + 1) / (m * (m + 1) / 2)),
        "random_tree": RandomTreeStrategy(m, seed),
    }
    out = []
    for name, strat in strategies.items():
        total = wealth_conservation_check(strat, m, T)
        out.append({"name": f"conservation(m={m},T={T}).{name}", "passed": abs(total - 1.0) <= 1e-10,
                    "value": total, "expected": 1.0, "tolerance": 1e-10})
    return out
