"""Two-stock max-min universal portfolio for a committed horizon T.

The strategy is a mixture over the 2**T binary "pick" paths: a path picking
the first stock ``k`` times carries weight ``(k/T)**k (1-k/T)**(T-k) / p(T,2)``.
Since the weight depends only on ``k``, prefixes are grouped by their count
and the engine keeps, per count, the weighted path mass

    mass_t(k) = mu_t(k) * E_t(k) / W_t

where ``mu_t(k)`` is the total weight of all completions of one prefix with
``k`` picks, ``E_t(k)`` the sum of realized return products over those
prefixes, and ``W_t`` the engine wealth.  Carrying ``mu * E`` instead of ``E``
keeps every number in [0, 1]; the two factors separately span more than the
double range once T is in the thousands.

One step costs O(t); a full run over T sessions costs O(T**2).
"""
from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from functools import lru_cache

import numba
import numpy as np

from .errors import HorizonError, InputError, ScaleGuardError
from .hindsight import horse_race_log_hindsight
from .pricing import log_price


@dataclass(frozen=True)
class MixtureTables:
    """Completion weights for horizon T, shared read-only by all pairs.

    ``log_mu[t, k]`` is log mu_t(k) (``-inf`` for k > t).  ``up[t, k]`` is the
    conditional weight of picking the first stock next after a length-t
    prefix with k picks, ``stay[t, k] = 1 - up[t, k]`` computed directly.
    """

    T: int
    log_mu: np.ndarray
    up: np.ndarray
    stay: np.ndarray


@lru_cache(maxsize=8)
def mixture_tables(T: int) -> MixtureTables:
    if T < 1:
        raise InputError(f"horizon T must be >= 1, got {T}")
    k = np.arange(T + 1, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        final = np.where(k > 0, k * np.log(k / T), 0.0) + \
            np.where(k < T, (T - k) * np.log((T - k) / T), 0.0)
    log_mu = np.full((T + 1, T + 1), -np.inf)
    log_mu[T] = final - log_price(T, 2)
    for t in range(T - 1, -1, -1):
        log_mu[t, : t + 1] = np.logaddexp(log_mu[t + 1, 1: t + 2], log_mu[t + 1, : t + 1])
    up = np.zeros((T, T + 1))
    stay = np.zeros((T, T + 1))
    for t in range(T):
        up[t, : t + 1] = np.exp(log_mu[t + 1, 1: t + 2] - log_mu[t, : t + 1])
        stay[t, : t + 1] = np.exp(log_mu[t + 1, : t + 1] - log_mu[t, : t + 1])
    for arr in (log_mu, up, stay):
        arr.setflags(write=False)
    return MixtureTables(T, log_mu, up, stay)


def marginal_weight(t: int, k: int, T: int) -> float:
    """Total weight mu_t(k) of all completions of a length-t prefix with k picks."""
    if not (0 <= k <= t <= T):
        raise InputError(f"need 0 <= k <= t <= T, got k={k}, t={t}, T={T}")
    return math.exp(mixture_tables(T).log_mu[t, k])


@dataclass(frozen=True)
class PairEngineState:
    pair: tuple[int, int]
    T: int
    t: int
    mass: np.ndarray
    log_wealth: float
    weight: float

    @property
    def wealth(self) -> float:
        return math.exp(self.log_wealth) if self.log_wealth > -math.inf else 0.0

    @property
    def bankrupt(self) -> bool:
        return self.log_wealth == -math.inf

    def log_path_products(self) -> np.ndarray:
        """log E_t(k): log of the summed return products over prefixes with k picks."""
        lm = mixture_tables(self.T).log_mu[self.t, : self.t + 1]
        with np.errstate(divide="ignore"):
            return np.log(self.mass) - lm + self.log_wealth


def pair_engine_init(pair: tuple[int, int], T: int) -> PairEngineState:
    tab = mixture_tables(T)
    mass = np.ones(1)
    return PairEngineState(tuple(pair), T, 0, mass, 0.0, float(tab.up[0, 0]))


def pair_engine_step(state: PairEngineState, xi: float, xj: float) -> PairEngineState:
    """Advance one session with gross returns ``xi`` (first stock) and ``xj``."""
    if xi < 0 or xj < 0:
        raise InputError(f"negative return ({xi}, {xj})")
    t, T = state.t, state.T
    if t >= T:
        raise HorizonError(f"pair {state.pair} already at its horizon T={T}")
    tab = mixture_tables(T)
    if state.bankrupt:
        return PairEngineState(state.pair, T, t + 1, np.zeros(t + 2), -math.inf, 0.5)
    moved = state.mass * tab.up[t, : t + 1] * xi
    kept = state.mass * tab.stay[t, : t + 1] * xj
    new = np.zeros(t + 2)
    new[1:] += moved
    new[:-1] += kept
    total = new.sum()
    if total <= 0:
        return PairEngineState(state.pair, T, t + 1, np.zeros(t + 2), -math.inf, 0.5)
    new /= total
    weight = float(np.dot(new, tab.up[t + 1, : t + 2])) if t + 1 < T else math.nan
    return PairEngineState(state.pair, T, t + 1, new, state.log_wealth + math.log(total), weight)


# --- batch kernel -----------------------------------------------------------

if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "workqueue"
if os.environ.get("PAIRHEDGE_THREADS"):
    numba.set_num_threads(int(os.environ["PAIRHEDGE_THREADS"]))

_BLOCK = 32


@numba.njit(cache=True, parallel=True, fastmath={"contract", "reassoc"})
def _pair_paths(X, left, right, up, stay, log_w, frac):
    """Run every pair engine over all T sessions.

    Writes ``log_w[p, t]`` (log wealth after t sessions) and ``frac[p, t]``
    (fraction on the first stock for session t + 1).  Pairs are processed in
    blocks so that one row of the shared tables serves the whole block while
    it is in cache.
    """
    T = X.shape[0]
    P = left.shape[0]
    nblocks = (P + _BLOCK - 1) // _BLOCK
    for blk in numba.prange(nblocks):
        p0 = blk * _BLOCK
        p1 = min(P, p0 + _BLOCK)
        nb = p1 - p0
        cur = np.zeros((nb, T + 2))
        nxt = np.zeros((nb, T + 2))
        tot = np.ones(nb)
        for q in range(nb):
            cur[q, 0] = 1.0
            log_w[p0 + q, 0] = 0.0
            frac[p0 + q, 0] = up[0, 0]
        for t in range(T):
            upt = up[t]
            stt = stay[t]
            has_next = t + 1 < T
            for q in range(nb):
                p = p0 + q
                if tot[q] == 0.0:
                    log_w[p, t + 1] = -np.inf
                    frac[p, t + 1] = 0.5
                    continue
                inv = 1.0 / tot[q]
                xi = X[t, left[p]] * inv
                xj = X[t, right[p]] * inv
                c = cur[q]
                n = nxt[q]
                s = 0.0
                n[0] = c[0] * stt[0] * xj
                s += n[0]
                for k in range(1, t + 1):
                    v = c[k - 1] * upt[k - 1] * xi + c[k] * stt[k] * xj
                    n[k] = v
                    s += v
                n[t + 1] = c[t] * upt[t] * xi
                s += n[t + 1]
                if s > 0.0:
                    log_w[p, t + 1] = log_w[p, t] + np.log(s)
                    if has_next:
                        upn = up[t + 1]
                        sb = 0.0
                        for k in range(t + 2):
                            sb += n[k] * upn[k]
                        frac[p, t + 1] = sb / s
                    else:
                        frac[p, t + 1] = np.nan
                else:
                    log_w[p, t + 1] = -np.inf
                    frac[p, t + 1] = 0.5
                tot[q] = s
            cur, nxt = nxt, cur
    return log_w, frac


def all_pairs(m: int) -> tuple[np.ndarray, np.ndarray]:
    left, right = np.triu_indices(m, k=1)
    return left.astype(np.int64), right.astype(np.int64)


def pair_trajectories(x, T: int | None = None, pairs=None) -> tuple[np.ndarray, np.ndarray]:
    """Log wealth and first-stock fraction of every pair engine after each session.

    Returns arrays of shape ``(P, T + 1)``; pairs are ordered as
    ``np.triu_indices(m, 1)`` unless given explicitly.
    """
    x = np.ascontiguousarray(x, dtype=float)
    T = x.shape[0] if T is None else T
    if x.shape[0] != T:
        raise InputError(f"sequence has {x.shape[0]} rows, horizon is {T}")
    if pairs is None:
        left, right = all_pairs(x.shape[1])
    else:
        left = np.array([p[0] for p in pairs], dtype=np.int64)
        right = np.array([p[1] for p in pairs], dtype=np.int64)
    tab = mixture_tables(T)
    P = len(left)
    log_w = np.empty((P, T + 1))
    frac = np.empty((P, T + 1))
    _pair_paths(x, left, right, tab.up, tab.stay, log_w, frac)
    return log_w, frac


# --- strategies over m assets -------------------------------------------------


class PairStrategy:
    """A single pair engine viewed as an m-asset trading strategy."""

    def __init__(self, pair: tuple[int, int], m: int, T: int):
        i, j = pair
        if not (0 <= i < j < m):
            raise InputError(f"bad pair {pair} for m={m}")
        self.pair, self.m, self.T = (i, j), m, T

    def start(self) -> PairEngineState:
        return pair_engine_init(self.pair, self.T)

    def weights(self, state: PairEngineState) -> np.ndarray:
        w = np.zeros(self.m)
        w[self.pair[0]] = state.weight
        w[self.pair[1]] = 1.0 - state.weight
        return w

    def update(self, state: PairEngineState, x) -> PairEngineState:
        i, j = self.pair
        return pair_engine_step(state, x[i], x[j])

    def log_wealth(self, state: PairEngineState) -> float:
        return state.log_wealth


MAX_MIXTURE_PATHS = 10**6


class PathMixtureStrategy:
    """Brute-force strategy whose wealth is ``sum_path w(path) prod_t x[t, path_t]``.

    ``paths`` is an (N, T) integer array of asset indices and ``log_weights``
    the log path weights (summing to at most one).  The state is the
    per-path log accumulated product over the observed prefix.
    """

    def __init__(self, paths: np.ndarray, log_weights: np.ndarray, m: int):
        self.paths = np.asarray(paths, dtype=np.int64)
        self.log_weights = np.asarray(log_weights, dtype=float)
        self.m = m
        self.T = self.paths.shape[1]

    def start(self):
        return (0, self.log_weights.copy())

    def weights(self, state) -> np.ndarray:
        t, lw = state
        if t >= self.T:
            raise HorizonError("mixture strategy is past its horizon")
        top = lw.max()
        if top == -np.inf:
            return np.full(self.m, 1.0 / self.m)
        w = np.exp(lw - top)
        theta = np.bincount(self.paths[:, t], weights=w, minlength=self.m)
        return theta / theta.sum()

    def update(self, state, x):
        t, lw = state
        if t >= self.T:
            raise HorizonError("mixture strategy is past its horizon")
        with np.errstate(divide="ignore"):
            picked = np.log(np.asarray(x, dtype=float)[self.paths[:, t]])
        return (t + 1, lw + picked)

    def log_wealth(self, state) -> float:
        _, lw = state
        top = lw.max()
        if top == -np.inf:
            return -math.inf
        return float(top + np.log(np.exp(lw - top).sum()))


def _all_paths(alphabet, T: int) -> np.ndarray:
    return np.array(list(itertools.product(alphabet, repeat=T)), dtype=np.int64).reshape(-1, T)


def full_support_mixture(m: int, T: int) -> PathMixtureStrategy:
    """The m-stock max-min universal portfolio by explicit path enumeration."""
    if m > 3 or T > 10:
        raise ScaleGuardError(f"brute-force mixture limited to m <= 3, T <= 10 (got m={m}, T={T})")
    paths = _all_paths(range(m), T)
    lp = np.array([horse_race_log_hindsight(p, m) for p in paths]) - log_price(T, m)
    return PathMixtureStrategy(paths, lp, m)


def small_m_oc_strategy(prefix, T: int, m: int) -> np.ndarray:
    """Next-session weights of the m-stock max-min universal portfolio after ``prefix``."""
    strat = full_support_mixture(m, T)
    prefix = np.asarray(prefix, dtype=float).reshape(-1, m)
    state = strat.start()
    for row in prefix:
        state = strat.update(state, row)
    return strat.weights(state)
