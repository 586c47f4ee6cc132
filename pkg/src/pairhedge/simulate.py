"""Market simulators: Shannon's demon, log-normal random walk, Kelly horse race.

Every simulator draws from a Philox counter-based generator keyed by
``(seed, stream)``, so a given path is reproducible independently of how
many other paths were generated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .hindsight import ReturnSequence


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream])))


@dataclass(frozen=True)
class GbmPairSpec:
    sigma: float = math.log(2.0)
    dt: float = 0.01
    horizon: float = 1000.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0 or self.dt <= 0 or self.horizon <= 0:
            raise InputError("need sigma >= 0, dt > 0 and horizon > 0")

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.dt))


@dataclass(frozen=True)
class DemonDiagnostics:
    seed: int
    stream: int
    horizon: float
    rebalanced_growth: float
    stock_growth: tuple[float, float]
    theory_growth: float


def simulate_shannon_demon(spec: GbmPairSpec, stream: int = 0):
    """Two independent zero-growth geometric Brownian motions, sampled exactly.

    With drift sigma**2/2 the log price is ``sigma W(t)``, so each step's gross
    return is ``exp(sigma sqrt(dt) Z)``.  The half-and-half portfolio is
    rebalanced at every step.  Returns ``(ReturnSequence, DemonDiagnostics)``.
    """
    n = spec.steps
    z = make_rng(spec.seed, stream).standard_normal((n, 2))
    log_x = spec.sigma * math.sqrt(spec.dt) * z
    x = np.exp(log_x)
    log_v = np.log(0.5 * (x[:, 0] + x[:, 1])).sum()
    diag = DemonDiagnostics(
        seed=spec.seed, stream=stream, horizon=n * spec.dt,
        rebalanced_growth=float(log_v / (n * spec.dt)),
        stock_growth=tuple(float(g) for g in log_x.sum(axis=0) / (n * spec.dt)),
        theory_growth=spec.sigma ** 2 / 4,
    )
    return ReturnSequence(x, ("demon_1", "demon_2")), diag


@dataclass(frozen=True)
class LogNormalSpec:
    nu: tuple[float, ...]
    sigma: tuple[float, ...]
    T: int
    corr: np.ndarray | None = None
    seed: int = 0


def _sqrt_psd(corr: np.ndarray) -> np.ndarray:
    corr = np.asarray(corr, dtype=float)
    m = corr.shape[0]
    if corr.shape != (m, m) or not np.allclose(corr, corr.T, atol=1e-12):
        raise InputError("correlation matrix must be square and symmetric")
    if not np.allclose(np.diag(corr), 1.0, atol=1e-12):
        raise InputError("correlation matrix must have a unit diagonal")
    vals, vecs = np.linalg.eigh(corr)
    if vals.min() < -1e-12:
        raise InputError(f"correlation matrix is not positive semidefinite (eigenvalue {vals.min():.3g})")
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T


def simulate_lognormal(spec: LogNormalSpec) -> ReturnSequence:
    """Rows ``x_tj = exp(nu_j + sigma_j eps_tj)`` with correlated standard normal eps."""
    nu = np.asarray(spec.nu, dtype=float)
    sig = np.asarray(spec.sigma, dtype=float)
    m = len(nu)
    if len(sig) != m or np.any(sig < 0):
        raise InputError("nu and sigma must have equal length and sigma >= 0")
    corr = np.eye(m) if spec.corr is None else spec.corr
    root = _sqrt_psd(corr)
    eps = make_rng(spec.seed).standard_normal((spec.T, m)) @ root
    return ReturnSequence(np.exp(nu + sig * eps))


@dataclass(frozen=True)
class HorseRaceSpec:
    m: int
    T: int
    win_probs: tuple[float, ...] | None = None
    path: tuple[int, ...] | None = None
    odds: float | np.ndarray = 1.0
    seed: int = 0


def simulate_horse_race(spec: HorseRaceSpec) -> ReturnSequence:
    """Rows ``O_{t, j_t} e_{j_t}``; winners drawn from ``win_probs`` or taken from ``path``."""
    m, T = spec.m, spec.T
    if spec.path is not None:
        winners = np.asarray(spec.path, dtype=int)
        if len(winners) != T or np.any((winners < 0) | (winners >= m)):
            raise InputError("deterministic path must have T entries in 0..m-1")
    else:
        probs = np.full(m, 1.0 / m) if spec.win_probs is None else np.asarray(spec.win_probs, float)
        if len(probs) != m or np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise InputError("win probabilities must lie on the simplex")
        winners = make_rng(spec.seed).choice(m, size=T, p=probs)
    odds = np.broadcast_to(np.asarray(spec.odds, dtype=float), (T, m))
    if np.any(odds <= 0):
        raise InputError("odds must be positive")
    x = np.zeros((T, m))
    rows = np.arange(T)
    x[rows, winners] = odds[rows, winners]
    return ReturnSequence(x)
