"""Confidence bounds, second-max selection and CTR estimator bookkeeping."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np


class BonusVariant(str, enum.Enum):
    """Which log term goes under the exploration bonus.

    ``ANALYSIS`` uses ln(2nT), the quantity every concentration bound is
    stated with; ``LITERAL`` uses ln(T), as the mechanism is usually written.
    """

    ANALYSIS = "analysis_log2nT"
    LITERAL = "literal_logT"


def log_term(T: float, n: int, variant: BonusVariant = BonusVariant.ANALYSIS) -> float:
    if T < 1:
        raise ValueError(f"horizon must be >= 1 for the bonus, got {T}")
    if BonusVariant(variant) is BonusVariant.LITERAL:
        return math.log(T)
    return math.log(2 * n * T)


def bonus_from_log(log_value: float, N):
    # sqrt(3 ln(.) / (2N)); shared by the scalar and batch paths so both round identically
    return np.sqrt(3.0 * log_value / (2.0 * N))


def ucb_bonus(N: int, T: float, n: int, variant: BonusVariant = BonusVariant.ANALYSIS) -> float:
    """Exploration bonus sqrt(3 ln(.) / (2N)) with natural logs."""
    if N < 1:
        raise ValueError("bonus is undefined for an ad that has never been shown")
    return float(bonus_from_log(log_term(T, n, variant), N))


def hoeffding_bound(k: int, t: float) -> float:
    """One-sided Hoeffding tail exp(-2 k t^2) for the mean of k [0, 1] variables."""
    if k < 1 or t < 0:
        raise ValueError("need k >= 1 and t >= 0")
    return math.exp(-2.0 * k * t * t)


def _ranked(values) -> list[int]:
    vals = list(values)
    if len(vals) < 2:
        raise ValueError(f"second maximum needs at least two values, got {len(vals)}")
    # descending by value, lowest index first among ties
    return sorted(range(len(vals)), key=lambda i: (-vals[i], i))


def argsmax(values) -> int:
    """Index of the second-largest entry; with a tied maximum this is the second max index."""
    return _ranked(values)[1]


def smax(values) -> float:
    """Second-largest entry, counting duplicates (so smax(5, 5, 2) == 5)."""
    return float(list(values)[argsmax(values)])


def top_two(scores: np.ndarray) -> tuple[int, int]:
    """(argmax, argsmax) of a score vector, lowest index on ties."""
    a = int(np.argmax(scores))
    masked = np.array(scores, dtype=float)
    masked[a] = -np.inf
    return a, int(np.argmax(masked))


@dataclass(frozen=True)
class EstimatorState:
    """Per-ad impression counts and empirical CTRs for one run."""

    pulls: np.ndarray
    means: np.ndarray
    horizon: int
    variant: BonusVariant = BonusVariant.ANALYSIS

    @classmethod
    def empty(cls, n: int, horizon: int, variant: BonusVariant = BonusVariant.ANALYSIS):
        return cls(np.zeros(n, dtype=np.int64), np.zeros(n), horizon, BonusVariant(variant))

    @property
    def n(self) -> int:
        return len(self.pulls)

    @property
    def warmed(self) -> bool:
        return bool(np.all(self.pulls >= 1))

    def log_value(self) -> float:
        return log_term(max(self.horizon, 1), self.n, self.variant)

    def bonus(self) -> np.ndarray:
        if not self.warmed:
            raise ValueError("bonus is undefined until every ad has been shown once")
        return bonus_from_log(self.log_value(), self.pulls)

    def ucb(self) -> np.ndarray:
        return self.means + self.bonus()

    def lcb(self) -> np.ndarray:
        return self.means - self.bonus()

    def update(self, ad: int, click: int) -> EstimatorState:
        if not 0 <= ad < self.n:
            raise IndexError(f"ad {ad} out of range")
        pulls = self.pulls.copy()
        means = self.means.copy()
        pulls[ad] += 1
        k = pulls[ad]
        means[ad] = (1.0 - 1.0 / k) * means[ad] + (1.0 / k) * click
        return replace(self, pulls=pulls, means=means)


def update(state: EstimatorState, ad: int, click: int) -> EstimatorState:
    return state.update(ad, click)


def confidence_event_holds(trace, env) -> tuple[np.ndarray, bool]:
    """Per-round check of 0 <= UCB_i - rho_i <= 2 * bonus_i for every ad.

    ``trace`` is a :class:`~ppc_auctions.mechanisms.RunRecord` produced with
    tracing on; its snapshots hold the estimator state before each round.
    """
    snaps = getattr(trace, "snapshots", None)
    if not snaps:
        raise ValueError("run was not traced; no estimator snapshots to check")
    rho = np.asarray(env.ctrs)
    held = np.array([_event_at(s, rho) for s in snaps], dtype=bool)
    return held, bool(held.all())


def _event_at(state: EstimatorState, rho: np.ndarray) -> bool:
    b = state.bonus()
    gap = state.means + b - rho
    return bool(np.all(gap >= 0) and np.all(gap <= 2 * b))


class CoverageMonitor:
    """Batch counterpart of :func:`confidence_event_holds`: one flag per run."""

    def __init__(self, ctrs, runs: int):
        self.rho = np.asarray(ctrs)
        self.held = np.ones(runs, dtype=bool)

    def observe(self, t, ucb, bonus, winner):
        gap = ucb - self.rho
        ok = np.all((gap >= 0) & (gap <= 2 * bonus), axis=1)
        self.held &= ok


class OvershootMonitor:
    """Counts rounds won by the best ad in which the runner-up's UCB is at least rho_s + margin."""

    def __init__(self, best: int, runner_up: int, threshold: float, runs: int):
        self.best = best
        self.s = runner_up
        self.threshold = threshold
        self.won = np.zeros(runs, dtype=np.int64)
        self.over = np.zeros(runs, dtype=np.int64)

    def observe(self, t, ucb, bonus, winner):
        hit = winner == self.best
        self.won += hit
        self.over += hit & (ucb[:, self.s] >= self.threshold)
