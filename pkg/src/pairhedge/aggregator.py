"""The aggregated pairs strategy: one universal pair engine per pair of stocks.

Each of the C(m, 2) engines receives an equal share of the trader's dollar
(equivalently, p(T, 2) dollars each, normalized by the total hedge cost).
The market-level portfolio is the wealth-weighted average of the pair
portfolios.  All wealth figures are per dollar of trader capital.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import BankruptError, HorizonError, InputError
from .hindsight import best_pairs_rule_overall, best_single_stock, validate_returns
from .pricing import PriceQuery, regret_bound
from .uportfolio import all_pairs, pair_engine_init, pair_engine_step, pair_trajectories


@dataclass(frozen=True)
class AggregateState:
    m: int
    T: int
    t: int
    engines: dict = field(repr=False)

    @property
    def total_log_wealth(self) -> float:
        lw = np.array([e.log_wealth for e in self.engines.values()])
        top = lw.max()
        if top == -np.inf:
            return -math.inf
        return float(top + np.log(np.exp(lw - top).sum()) - math.log(len(lw)))

    @property
    def wealth(self) -> float:
        lw = self.total_log_wealth
        return math.exp(lw) if lw > -math.inf else 0.0


def aggregate_init(m: int, T: int) -> AggregateState:
    if m < 2:
        raise InputError(f"need m >= 2 stocks, got {m}")
    engines = {p: pair_engine_init(p, T) for p in itertools.combinations(range(m), 2)}
    return AggregateState(m, T, 0, engines)


def _scaled(engines: dict) -> tuple[list, np.ndarray]:
    keys = list(engines)
    lw = np.array([engines[k].log_wealth for k in keys])
    top = lw.max()
    if top == -np.inf:
        raise BankruptError("every pair engine is bankrupt")
    return keys, np.exp(lw - top)


def aggregate_weights(state: AggregateState) -> np.ndarray:
    """Fraction of wealth on each stock for the next session.

    Stock k collects ``W_ik (1 - b_ik)`` from pairs where it is the second
    member and ``W_ki b_ki`` from pairs where it is the first, divided by the
    total pair wealth.
    """
    if state.t >= state.T:
        raise HorizonError(f"no sessions left (t = T = {state.T})")
    keys, w = _scaled(state.engines)
    scale = dict(zip(keys, w))
    theta = np.zeros(state.m)
    for k in range(state.m):
        acc = 0.0
        for i in range(k):
            acc += scale[(i, k)] * (1.0 - state.engines[(i, k)].weight)
        for i in range(k + 1, state.m):
            acc += scale[(k, i)] * state.engines[(k, i)].weight
        theta[k] = acc
    return theta / w.sum()


def aggregate_weights_scatter(state: AggregateState) -> np.ndarray:
    """Same portfolio as :func:`aggregate_weights`, accumulated pair by pair."""
    if state.t >= state.T:
        raise HorizonError(f"no sessions left (t = T = {state.T})")
    keys, w = _scaled(state.engines)
    theta = np.zeros(state.m)
    for (i, j), wij in zip(keys, w):
        b = state.engines[(i, j)].weight
        theta[i] += wij * b
        theta[j] += wij * (1.0 - b)
    return theta / w.sum()


def aggregate_step(state: AggregateState, x) -> AggregateState:
    x = np.asarray(x, dtype=float)
    if x.shape != (state.m,):
        raise InputError(f"return vector of shape {x.shape}, expected ({state.m},)")
    if np.any(x < 0) or not np.any(x > 0):
        raise InputError("return vector must be nonnegative with a positive entry")
    if state.t >= state.T:
        raise HorizonError(f"cannot step past the horizon T={state.T}")
    engines = {(i, j): pair_engine_step(e, x[i], x[j]) for (i, j), e in state.engines.items()}
    return AggregateState(state.m, state.T, state.t + 1, engines)


class AggregateStrategy:
    """The aggregated pairs super-hedge as a trading strategy over m assets."""

    def __init__(self, m: int, T: int):
        self.m, self.T = m, T

    def start(self) -> AggregateState:
        return aggregate_init(self.m, self.T)

    def weights(self, state: AggregateState) -> np.ndarray:
        return aggregate_weights(state)

    def update(self, state: AggregateState, x) -> AggregateState:
        return aggregate_step(state, x)

    def log_wealth(self, state: AggregateState) -> float:
        return state.total_log_wealth


# --- batch run ------------------------------------------------------------------


@numba.njit(cache=True)
def _combine(log_w, frac, left, right, m):
    P, n = log_w.shape
    T = n - 1
    theta = np.zeros((T, m))
    total = np.empty(n)
    for t in range(n):
        top = -np.inf
        for p in range(P):
            if log_w[p, t] > top:
                top = log_w[p, t]
        if top == -np.inf:
            total[t] = -np.inf
            continue
        den = 0.0
        for p in range(P):
            w = np.exp(log_w[p, t] - top)
            den += w
            if t < T:
                theta[t, left[p]] += w * frac[p, t]
                theta[t, right[p]] += w * (1.0 - frac[p, t])
        total[t] = top + np.log(den)
        if t < T:
            for k in range(m):
                theta[t, k] /= den
    return total, theta


def combine_pairs(log_w: np.ndarray, frac: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Aggregate per-pair trajectories into trader log wealth (T+1,) and weights (T, m).

    Row ``t`` of the weights is the portfolio held during session ``t + 1``.
    """
    left, right = all_pairs(m)
    total, theta = _combine(log_w, frac, left, right, m)
    total = total - math.log(len(left))
    dead = np.flatnonzero(total[:-1] == -np.inf)
    if len(dead):
        raise BankruptError(f"every pair engine is bankrupt after session {dead[0]}")
    return total, theta


@dataclass
class RunResult:
    T: int
    m: int
    log_wealth: np.ndarray          # (T+1,), trader log wealth after t sessions
    weights: np.ndarray             # (T, m), row t-1 is the portfolio of session t
    running_log_d2: np.ndarray      # (T+1,), NaN where not evaluated
    pair_log_wealth: np.ndarray     # (P,), final log W_ij per dollar put in each engine
    pair_weight: np.ndarray         # (P,), first-stock fraction before the last session
    best_pair: tuple[int, int]
    best_pair_weight: float
    log_d2: float
    best_stock: int
    log_best_stock: float
    bound: float

    @property
    def final_log_wealth(self) -> float:
        return float(self.log_wealth[-1])

    @property
    def excess_growth(self) -> float:
        """(log D2 - log W) / T; -inf when the best pairs rule went bankrupt."""
        if self.log_d2 == -math.inf:
            return -math.inf
        return (self.log_d2 - self.final_log_wealth) / self.T

    @property
    def market_diagnostic(self) -> float:
        """(log D2 - log max_j prod_t x_tj) / T."""
        if self.log_best_stock == -math.inf:
            return math.inf if self.log_d2 > -math.inf else math.nan
        return (self.log_d2 - self.log_best_stock) / self.T

    @property
    def running_regret(self) -> np.ndarray:
        t = np.arange(self.T + 1, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = (self.running_log_d2 - self.log_wealth) / t
        r[0] = 0.0
        return r

    def trajectory(self):
        """Rows ``(t, wealth, log_wealth, theta_t, running_regret)`` for t = 1..T."""
        reg = self.running_regret
        for t in range(1, self.T + 1):
            lw = float(self.log_wealth[t])
            yield t, math.exp(lw), lw, self.weights[t - 1], float(reg[t])


PAIR_SOLVE_BUDGET = 5000


def _checkpoints(T: int, pairs: int, every: int | None) -> list[int]:
    if every is None:
        n = max(1, PAIR_SOLVE_BUDGET // pairs)
        every = max(1, math.ceil(T / n))
    pts = set(range(every, T + 1, every))
    pts.add(T)
    return sorted(pts)


def run_full(x, T: int | None = None, hindsight_every: int | None = None) -> RunResult:
    """Run the aggregated strategy over the whole sequence and compare with hindsight.

    ``hindsight_every`` sets how often the running best pairs wealth is
    recomputed on the prefix; by default it is chosen to keep the number of
    pair optimizations near ``PAIR_SOLVE_BUDGET``.  The final session is
    always evaluated.
    """
    x = validate_returns(x)
    T = x.shape[0] if T is None else T
    if x.shape[0] != T:
        raise InputError(f"sequence has {x.shape[0]} rows, horizon is {T}")
    m = x.shape[1]
    if m < 2:
        raise InputError(f"need m >= 2 stocks, got {m}")
    log_w, frac = pair_trajectories(x, T)
    total, theta = combine_pairs(log_w, frac, m)

    running = np.full(T + 1, np.nan)
    running[0] = 0.0
    P = log_w.shape[0]
    for t in _checkpoints(T, P, hindsight_every):
        _, sol = best_pairs_rule_overall(x[:t])
        running[t] = sol.log_wealth
    pair, sol = best_pairs_rule_overall(x)
    stock, log_stock = best_single_stock(x)
    return RunResult(
        T=T, m=m, log_wealth=total, weights=theta, running_log_d2=running,
        pair_log_wealth=log_w[:, -1], pair_weight=frac[:, -2],
        best_pair=pair, best_pair_weight=float(sol.weights[pair[0]]),
        log_d2=sol.log_wealth, best_stock=stock, log_best_stock=log_stock,
        bound=regret_bound(PriceQuery(T, 2, m)),
    )
