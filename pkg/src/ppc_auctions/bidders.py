"""Bidding policies: truthful bidding plus the scripted deviations used by the IC checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Truthful:
    def bid(self, value: float, t: int) -> float:
        return value

    def column(self, values: np.ndarray, rounds: np.ndarray) -> np.ndarray:
        return values


@dataclass(frozen=True)
class ScaledBid:
    factor: float
    # rounds (inclusive, 1-based) where the scaling applies; None means every round
    start: int | None = None
    stop: int | None = None

    def __post_init__(self):
        if not self.factor > 0:
            raise ValueError("scale factor must be positive")

    def bid(self, value: float, t: int) -> float:
        if (self.start is None or t >= self.start) and (self.stop is None or t <= self.stop):
            return self.factor * value
        return value

    def _active(self, rounds):
        lo = -np.inf if self.start is None else self.start
        hi = np.inf if self.stop is None else self.stop
        return (rounds >= lo) & (rounds <= hi)

    def column(self, values, rounds):
        return np.where(self._active(rounds), self.factor * values, values)


@dataclass(frozen=True)
class FixedDeviation:
    start: int
    stop: int
    alternative: float

    def __post_init__(self):
        if self.start > self.stop or self.start < 1:
            raise ValueError(f"bad round range {self.start}..{self.stop}")
        if self.alternative < 0:
            raise ValueError("bids must be nonnegative")

    def bid(self, value: float, t: int) -> float:
        return self.alternative if self.start <= t <= self.stop else value

    def column(self, values, rounds):
        return np.where((rounds >= self.start) & (rounds <= self.stop), self.alternative, values)


@dataclass(frozen=True)
class ZeroThenTruthful:
    switch: int

    def __post_init__(self):
        if self.switch < 1:
            raise ValueError("switch round must be >= 1")

    def bid(self, value: float, t: int) -> float:
        return 0.0 if t < self.switch else value

    def column(self, values, rounds):
        return np.where(rounds < self.switch, 0.0, values)


BidPolicy = Truthful | ScaledBid | FixedDeviation | ZeroThenTruthful


def truthful(n: int) -> list[BidPolicy]:
    return [Truthful()] * n


def deviate(n: int, ad: int, policy: BidPolicy) -> list[BidPolicy]:
    """Everyone truthful except ``ad``."""
    pols = truthful(n)
    pols[ad] = policy
    return pols


def bids_at(policies, values, t: int, cap_at_value: bool = False) -> tuple[float, ...]:
    if len(policies) != len(values):
        raise ValueError("need exactly one policy per ad")
    out = []
    for pol, v in zip(policies, values):
        b = pol.bid(v, t)
        out.append(min(b, v) if cap_at_value else b)
    return tuple(out)


def bid_matrix(policies, values: np.ndarray, first_round: int = 1, cap_at_value: bool = False) -> np.ndarray:
    """Bids for a block of rounds; row k holds round ``first_round + k``."""
    values = np.asarray(values, dtype=float)
    if len(policies) != values.shape[1]:
        raise ValueError("need exactly one policy per ad")
    rounds = np.arange(first_round, first_round + len(values))
    out = np.empty_like(values)
    for i, pol in enumerate(policies):
        col = pol.column(values[:, i], rounds)
        out[:, i] = np.minimum(col, values[:, i]) if cap_at_value else col
    return out
