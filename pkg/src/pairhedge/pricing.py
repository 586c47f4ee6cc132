"""Super-hedging prices for the best s-stock rebalancing rule in hindsight.

``p(T, s)`` is the sum over all compositions ``n_1 + ... + n_s = T`` of
``multinomial(T; n) * prod (n_i / T) ** n_i`` with ``0 ** 0 == 1``.  All
values are carried as natural logs; ``Price.value`` is a convenience that
overflows to ``inf`` for large horizons.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import InputError, ScaleGuardError

# largest s for which compositions are enumerated in production code paths
MAX_ENUMERATED_SUPPORT = 3
# larger supports are allowed only for short horizons (test scale)
SMALL_HORIZON = 20
HORIZON_CAP = 2**40
_CHUNK = 1 << 22


@dataclass(frozen=True)
class PriceQuery:
    horizon_T: int
    support_s: int = 2
    universe_m: int | None = None

    def __post_init__(self):
        if self.universe_m is None:
            object.__setattr__(self, "universe_m", self.support_s)
        T, s, m = self.horizon_T, self.support_s, self.universe_m
        if int(T) != T or T < 1:
            raise InputError(f"horizon T must be a positive integer, got {T}")
        if int(s) != s or s < 1:
            raise InputError(f"support s must be an integer >= 1, got {s}")
        if int(m) != m or m < s:
            raise InputError(f"universe m must be an integer >= s={s}, got {m}")


@dataclass(frozen=True)
class Price:
    log_value: float

    @property
    def value(self) -> float:
        try:
            return math.exp(self.log_value)
        except OverflowError:
            return math.inf


def _xlogx_over(n: np.ndarray, T: int) -> np.ndarray:
    """n * (log n - log T), with the 0 ** 0 = 1 convention at n = 0."""
    n = np.asarray(n, dtype=float)
    out = np.zeros_like(n)
    pos = n > 0
    out[pos] = n[pos] * (np.log(n[pos]) - math.log(T))
    return out


def _log_price_pairs(T: int) -> float:
    lgT = gammaln(T + 1.0)
    parts = []
    for lo in range(0, T + 1, _CHUNK):
        n = np.arange(lo, min(T + 1, lo + _CHUNK), dtype=float)
        terms = (lgT - gammaln(n + 1.0) - gammaln(T - n + 1.0)
                 + _xlogx_over(n, T) + _xlogx_over(T - n, T))
        parts.append(logsumexp(terms))
    return float(logsumexp(parts))


def _log_price_triples(T: int) -> float:
    lgT = gammaln(T + 1.0)
    parts = []
    for n1 in range(T + 1):
        rest = T - n1
        n2 = np.arange(rest + 1, dtype=float)
        n3 = rest - n2
        terms = (lgT - gammaln(n1 + 1.0) - gammaln(n2 + 1.0) - gammaln(n3 + 1.0)
                 + _xlogx_over(np.array([n1]), T)[0]
                 + _xlogx_over(n2, T) + _xlogx_over(n3, T))
        parts.append(logsumexp(terms))
    return float(logsumexp(parts))


def _log_price_convolved(T: int, s: int) -> float:
    # p(T,s) = T!/T^T * [z^T] (sum_n n^n z^n / n!)^s, folded one stock at a time
    n = np.arange(T + 1, dtype=float)
    a = _xlogx_over(n, 1) - gammaln(n + 1.0)  # log(n^n / n!)
    acc = a.copy()
    for _ in range(s - 1):
        nxt = np.full(T + 1, -np.inf)
        for k in range(T + 1):
            nxt[k] = logsumexp(acc[: k + 1] + a[k::-1])
        acc = nxt
    return float(gammaln(T + 1.0) - T * math.log(T) + acc[T])


@lru_cache(maxsize=4096)
def log_price(T: int, s: int) -> float:
    """Natural log of p(T, s)."""
    PriceQuery(T, s)
    if s == 1:
        return 0.0
    if s == 2:
        return _log_price_pairs(T)
    if s == 3:
        return _log_price_triples(T)
    if T > SMALL_HORIZON:
        raise ScaleGuardError(
            f"composition enumeration infeasible for s={s} > {MAX_ENUMERATED_SUPPORT} "
            f"with T={T} > {SMALL_HORIZON}")
    return _log_price_convolved(T, s)


def price(q: PriceQuery) -> Price:
    if q.universe_m != q.support_s:
        raise InputError("price() takes a query with universe_m == support_s; "
                         "use pairs_hedge_cost for a larger universe")
    return Price(log_price(q.horizon_T, q.support_s))


def log_binom(m: int, s: int) -> float:
    return math.lgamma(m + 1) - math.lgamma(s + 1) - math.lgamma(m - s + 1)


def pairs_hedge_cost(q: PriceQuery) -> Price:
    """Cost C(m, s) * p(T, s) of one super-hedge per s-stock support."""
    return Price(math.log(math.comb(q.universe_m, q.support_s))
                 + log_price(q.horizon_T, q.support_s))


def price_upper_bound(T: int) -> float:
    """The bound p(T, 2) <= 2 sqrt(T + 1)."""
    if T < 1:
        raise InputError(f"T must be >= 1, got {T}")
    return 2.0 * math.sqrt(T + 1)


def regret_bound(q: PriceQuery) -> float:
    """Worst-case excess log growth per session of the best pair over the trader."""
    if q.support_s != 2:
        raise InputError("regret_bound is defined for the pairs benchmark (s=2)")
    return pairs_hedge_cost(q).log_value / q.horizon_T


def _bound(T: int, log_pairs: float) -> float:
    return (log_pairs + log_price(T, 2)) / T


def horizon_for_tolerance(epsilon: float, m: int) -> int:
    """Smallest T whose pairs regret bound is strictly below ``epsilon``.

    Doubles T until the bound drops under ``epsilon``, then bisects the last
    doubling interval.
    """
    if not epsilon > 0:
        raise InputError(f"epsilon must be > 0, got {epsilon}")
    if m < 2:
        raise InputError(f"m must be >= 2, got {m}")
    log_pairs = math.log(math.comb(m, 2))
    hi = 1
    while _bound(hi, log_pairs) >= epsilon:
        hi *= 2
        if hi > HORIZON_CAP:
            raise ScaleGuardError(f"no horizon up to 2**40 reaches epsilon={epsilon}")
    if hi == 1:
        return 1
    lo = hi // 2  # bound(lo) >= epsilon
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _bound(mid, log_pairs) < epsilon:
            hi = mid
        else:
            lo = mid
    return hi
