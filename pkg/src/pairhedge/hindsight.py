"""Best constant-rebalanced portfolios in hindsight.

Wealth of a rebalancing rule ``b`` on returns ``x`` is ``prod_t <b, x_t>``.
Zero wealth is represented in log space as ``-inf``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import InputError, ScaleGuardError

MAX_SUPPORTS = 10**6


@dataclass(frozen=True)
class ReturnSequence:
    """T x m matrix of gross returns; every row must have a positive entry."""

    returns: np.ndarray
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        x = validate_returns(self.returns)
        object.__setattr__(self, "returns", x)
        if self.names is not None and len(self.names) != x.shape[1]:
            raise InputError(f"{len(self.names)} asset names for {x.shape[1]} columns")

    @property
    def T(self) -> int:
        return self.returns.shape[0]

    @property
    def m(self) -> int:
        return self.returns.shape[1]

    def __array__(self, dtype=None, copy=None):
        return self.returns if dtype is None else self.returns.astype(dtype)


def validate_returns(x) -> np.ndarray:
    x = np.array(x, dtype=float)
    if x.ndim != 2:
        raise InputError(f"returns must be a 2-D array, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InputError("returns contain non-finite values")
    neg = np.argwhere(x < 0)
    if len(neg):
        r, c = neg[0]
        raise InputError(f"negative return at row {r}, column {c}")
    dead = np.flatnonzero(~np.any(x > 0, axis=1))
    if len(dead):
        raise InputError(f"row {dead[0]} has no positive return")
    return x


def validate_weights(b, m: int | None = None) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    if b.ndim != 1 or (m is not None and len(b) != m):
        raise InputError(f"weights of shape {b.shape} do not match m={m}")
    if np.any(b < 0) or abs(b.sum() - 1.0) > 1e-12:
        raise InputError("weights must be nonnegative and sum to 1")
    return b


@dataclass(frozen=True)
class HindsightSolution:
    weights: np.ndarray
    log_wealth: float
    support: tuple[int, ...] = field(default=())
    degenerate: bool = False

    @property
    def wealth(self) -> float:
        return math.exp(self.log_wealth) if self.log_wealth > -math.inf else 0.0


def crp_log_wealth(b, x) -> float:
    x = np.asarray(x, dtype=float)
    b = validate_weights(b, x.shape[1])
    growth = x @ b
    if np.any(growth <= 0):
        return -math.inf
    return float(np.sum(np.log(growth)))


def crp_wealth(b, x) -> float:
    """Final wealth of the constant-rebalanced portfolio ``b``."""
    lw = crp_log_wealth(b, x)
    return math.exp(lw) if lw > -math.inf else 0.0


def _pair_log_objective(beta: float, a: np.ndarray, c: np.ndarray) -> float:
    g = beta * a + (1.0 - beta) * c
    if np.any(g <= 0):
        return -math.inf
    return float(np.sum(np.log(g)))


def solve_pair(a: np.ndarray, c: np.ndarray, tol_grad: float = 1e-10,
               tol_width: float = 1e-12) -> tuple[float, float]:
    """Maximize sum_t log(beta a_t + (1 - beta) c_t) over beta in [0, 1].

    Returns ``(beta, log_wealth)``.  Uses Newton steps on the derivative,
    falling back to bisection whenever a step leaves the certified bracket.
    """
    if np.any((a == 0) & (c == 0)):
        return 0.5, -math.inf
    same = a == c
    const = float(np.sum(np.log(a[same])))
    a, c = a[~same], c[~same]
    if len(a) == 0:
        return 0.5, const
    d = a - c

    with np.errstate(divide="ignore"):
        slope_at_1 = np.sum(d / a) if np.all(a > 0) else -math.inf
        slope_at_0 = np.sum(d / c) if np.all(c > 0) else math.inf
    if slope_at_1 >= 0:
        return 1.0, const + float(np.sum(np.log(a)))
    if slope_at_0 <= 0:
        return 0.0, const + float(np.sum(np.log(c)))

    lo, hi = 0.0, 1.0
    beta = 0.5
    for _ in range(200):
        g = c + beta * d
        r = d / g
        f1 = r.sum()
        if abs(f1) <= tol_grad:
            break
        if f1 > 0:
            lo = beta
        else:
            hi = beta
        if hi - lo <= tol_width:
            break
        f2 = -np.dot(r, r)
        step = beta - f1 / f2
        beta = step if lo < step < hi else 0.5 * (lo + hi)
    return beta, const + _pair_log_objective(beta, a, c)


def best_pair_rule(i: int, j: int, x) -> HindsightSolution:
    """Best rebalancing rule supported on stocks ``i`` and ``j``."""
    x = np.asarray(x, dtype=float)
    m = x.shape[1]
    if not (0 <= i < j < m):
        raise InputError(f"need 0 <= i < j < m={m}, got ({i}, {j})")
    beta, lw = solve_pair(x[:, i], x[:, j])
    w = np.zeros(m)
    w[i], w[j] = beta, 1.0 - beta
    support = tuple(k for k in (i, j) if w[k] > 0)
    return HindsightSolution(w, lw, support, degenerate=(lw == -math.inf))


def best_pairs_rule_overall(x) -> tuple[tuple[int, int], HindsightSolution]:
    """Best pairs rule over all C(m, 2) pairs; ties go to the smallest (i, j)."""
    x = np.asarray(x, dtype=float)
    m = x.shape[1]
    if m < 2:
        raise InputError("need at least two assets for a pairs rule")
    best = None
    for i, j in itertools.combinations(range(m), 2):
        sol = best_pair_rule(i, j, x)
        if best is None or sol.log_wealth > best[1].log_wealth:
            best = ((i, j), sol)
    return best


@numba.njit(cache=True)
def _gradient(X, b, g):
    T, s = X.shape
    g[:] = 0.0
    for t in range(T):
        growth = 0.0
        for k in range(s):
            growth += X[t, k] * b[k]
        for k in range(s):
            g[k] += X[t, k] / growth


@numba.njit(cache=True)
def _slope_along(X, trial, d):
    # d/dh sum_t log <x_t, trial + h d> at h = 0, accumulated term by term
    # so that tiny moves keep full relative precision.
    T, s = X.shape
    acc = 0.0
    for t in range(T):
        num = 0.0
        growth = 0.0
        for k in range(s):
            num += X[t, k] * d[k]
            growth += X[t, k] * trial[k]
        acc += num / growth
    return acc


@numba.njit(cache=True)
def _eg_ascent(X, eta, tol, max_iter):
    T, s = X.shape
    b = np.full(s, 1.0 / s)
    g = np.empty(s)
    trial = np.empty(s)
    d = np.empty(s)
    _gradient(X, b, g)
    it = 0
    while it < max_iter:
        it += 1
        gmax = g.max()
        if gmax - T <= tol:
            break
        # Multiplicative update b_k e^{eta g_k} / sum, written as an additive
        # move d with expm1 so the move keeps its own relative precision.
        mean = 0.0
        for k in range(s):
            d[k] = np.expm1(eta * (g[k] - gmax))
            mean += b[k] * d[k]
        for k in range(s):
            d[k] = b[k] * (d[k] - mean) / (1.0 + mean)
            trial[k] = b[k] + d[k]
        # By concavity the move improved the objective when the slope at the
        # trial point still points along it.
        if _slope_along(X, trial, d) >= 0.0:
            b[:] = trial
            _gradient(X, b, g)
            eta *= 2.0
        else:
            eta *= 0.5
    return b / b.sum(), it


def log_optimal_weights(X: np.ndarray, tol: float = 1e-10, max_iter: int = 100_000,
                        step: float | None = None) -> tuple[np.ndarray, float, int]:
    """Exponentiated-gradient ascent of sum_t log <b, x_t> over the simplex.

    Starts from uniform weights with step ``0.5 / T``; the step doubles after
    an improving move and halves after a rejected one.  Stops once the
    concavity certificate ``max_k g_k - T`` (an upper bound on the remaining
    log-wealth gap, since ``<b, g> = T``) is at most ``tol``.  Returns
    ``(b, log_wealth, iterations)``.
    """
    X = np.ascontiguousarray(X, dtype=float)
    T, s = X.shape
    if np.any(~np.any(X > 0, axis=1)):
        return np.full(s, 1.0 / s), -math.inf, 0
    eta = 0.5 / T if step is None else step
    b, it = _eg_ascent(X, eta, tol, max_iter)
    return b, float(np.sum(np.log(X @ b))), int(it)


def best_s_rule(x, s: int, tol: float = 1e-10, max_iter: int = 100_000) -> HindsightSolution:
    """Best rebalancing rule with at most ``s`` stocks, by support enumeration."""
    x = np.asarray(x, dtype=float)
    T, m = x.shape
    if not (1 <= s <= m):
        raise InputError(f"need 1 <= s <= m={m}, got s={s}")
    if math.comb(m, s) > MAX_SUPPORTS:
        raise ScaleGuardError(f"C({m},{s}) supports exceed {MAX_SUPPORTS}")
    best_lw, best_w, best_S = -math.inf, None, None
    for S in itertools.combinations(range(m), s):
        cols = x[:, S]
        if s == 1:
            col = cols[:, 0]
            sub = np.ones(1)
            lw = float(np.sum(np.log(col))) if np.all(col > 0) else -math.inf
        else:
            sub, lw, _ = log_optimal_weights(cols, tol=tol, max_iter=max_iter)
        if best_w is None or lw > best_lw:
            best_lw, best_w, best_S = lw, sub, S
    w = np.zeros(m)
    w[list(best_S)] = best_w
    support = tuple(k for k in best_S if w[k] > 0)
    return HindsightSolution(w, best_lw, support, degenerate=(best_lw == -math.inf))


def best_single_stock(x) -> tuple[int, float]:
    """Index and log wealth of the best buy-and-hold stock."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        lw = np.log(x).sum(axis=0)
    k = int(np.argmax(lw))
    return k, float(lw[k])


def horse_race_log_hindsight(winners, s: int) -> float:
    """Log of the best s-stock rule's wealth on a unit-odds horse race path.

    Zero (``-inf``) when more than ``s`` distinct horses won; otherwise
    ``sum_i n_i log(n_i / T)``.
    """
    winners = np.asarray(winners)
    T = len(winners)
    _, counts = np.unique(winners, return_counts=True)
    if len(counts) > s:
        return -math.inf
    return float(np.sum(counts * (np.log(counts) - math.log(T))))
