"""Simulated world: true CTRs, valuation schedules and reproducible click streams.

Ads are indexed from 0. Rounds are numbered 1..T, matching how a horizon is
usually counted; the warm-start / exploration impressions do not change that.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .stats import argsmax, smax

# Uniforms per (run, ad) drawn at a time; the values themselves do not depend on it.
BLOCK = 1024


@dataclass(frozen=True)
class FixedValues:
    """The same per-click value for every round."""

    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if any(not v > 0 for v in self.values):
            raise ValueError(f"values must be positive, got {self.values}")

    @property
    def n(self) -> int:
        return len(self.values)

    def at(self, t: int) -> tuple[float, ...]:
        return self.values

    def matrix(self, horizon: int) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.values), (horizon, self.n)).copy()


@dataclass(frozen=True)
class AdversarialValues:
    """An arbitrary T x n table of values, row t-1 used in round t."""

    table: np.ndarray = field(repr=False)

    def __post_init__(self):
        table = np.array(self.table, dtype=float)
        if table.ndim != 2 or table.shape[0] < 1:
            raise ValueError(f"adversarial table must be 2-D with >= 1 row, got shape {table.shape}")
        if not np.all(table > 0):
            raise ValueError("adversarial values must be positive")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @property
    def n(self) -> int:
        return self.table.shape[1]

    def at(self, t: int) -> tuple[float, ...]:
        return tuple(self.table[t - 1].tolist())

    def matrix(self, horizon: int) -> np.ndarray:
        return self.table[:horizon].copy()


ValuationSchedule = FixedValues | AdversarialValues


@dataclass(frozen=True)
class AuctionEnv:
    ctrs: tuple[float, ...]
    schedule: ValuationSchedule
    horizon: int
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "ctrs", tuple(float(c) for c in self.ctrs))
        n = len(self.ctrs)
        if n < 2:
            raise ValueError("need at least two ads for a second-price auction")
        if any(not 0.0 < c < 1.0 for c in self.ctrs):
            raise ValueError(f"ctrs must lie strictly inside (0, 1), got {self.ctrs}")
        if self.schedule.n != n:
            raise ValueError(f"schedule has {self.schedule.n} ads but ctrs has {n}")
        if self.horizon < 0:
            raise ValueError(f"horizon must be nonnegative, got {self.horizon}")
        if isinstance(self.schedule, AdversarialValues) and self.schedule.table.shape[0] != self.horizon:
            raise ValueError(
                f"adversarial table has {self.schedule.table.shape[0]} rows, horizon is {self.horizon}"
            )
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")

    @property
    def n(self) -> int:
        return len(self.ctrs)

    @property
    def is_fixed(self) -> bool:
        return isinstance(self.schedule, FixedValues)

    def values_matrix(self) -> np.ndarray:
        """Values for rounds 1..T as a (T, n) array."""
        return self.schedule.matrix(self.horizon)


def fixed_env(ctrs, values, horizon: int, master_seed: int = 0) -> AuctionEnv:
    return AuctionEnv(tuple(ctrs), FixedValues(tuple(values)), horizon, master_seed)


def adversarial_env(ctrs, table, master_seed: int = 0) -> AuctionEnv:
    sched = AdversarialValues(np.asarray(table, dtype=float))
    return AuctionEnv(tuple(ctrs), sched, sched.table.shape[0], master_seed)


def value_at(env: AuctionEnv, t: int) -> tuple[float, ...]:
    if not 1 <= t <= env.horizon:
        raise IndexError(f"round {t} outside 1..{env.horizon}")
    return env.schedule.at(t)


@dataclass(frozen=True)
class GapProfile:
    ecpm: tuple[float, ...]
    best_index: int
    runner_up_index: int
    zeta: float
    deltas: dict[int, float]


def gap_profile(env: AuctionEnv) -> GapProfile:
    """eCPMs, the top-two gap and the per-ad normalized gaps of a fixed-value env."""
    if not env.is_fixed:
        raise TypeError("gap profile is only defined for fixed valuations")
    v = env.schedule.values
    ecpm = tuple(r * x for r, x in zip(env.ctrs, v))
    best = int(np.argmax(ecpm))
    s = argsmax(ecpm)
    deltas = {i: (ecpm[best] - ecpm[i]) / v[i] for i in range(env.n) if i != best}
    return GapProfile(ecpm, best, s, ecpm[best] - smax(ecpm), deltas)


def _ad_generator(master_seed: int, run: int, ad: int) -> np.random.Generator:
    ss = np.random.SeedSequence(master_seed, spawn_key=(run, ad))
    return np.random.Generator(np.random.PCG64(ss))


class ClickStream:
    """Click randomness for one run.

    The k-th impression of ad ``i`` in run ``r`` is clicked iff
    ``U[r, i, k] < ctr_i``, with ``U`` drawn from a generator keyed on
    ``(master_seed, r, i)``. Two histories of the same run that show an ad
    the same number of times therefore see the same clicks for it, whatever
    the order of the other impressions.
    """

    def __init__(self, master_seed: int, run: int, n: int):
        self.master_seed = master_seed
        self.run = run
        self._gens = [_ad_generator(master_seed, run, i) for i in range(n)]
        self._bufs = [np.empty(0) for _ in range(n)]
        self.draws = [0] * n

    def uniforms(self, ad: int, count: int) -> np.ndarray:
        """Next ``count`` uniforms of ``ad``'s stream; advances the position."""
        if not 0 <= ad < len(self._gens):
            raise IndexError(f"ad {ad} out of range")
        start, stop = self.draws[ad], self.draws[ad] + count
        buf = self._bufs[ad]
        if stop > len(buf):
            extra = -(-(stop - len(buf)) // BLOCK) * BLOCK
            buf = self._bufs[ad] = np.concatenate([buf, self._gens[ad].random(extra)])
        self.draws[ad] = stop
        return buf[start:stop]

    def click(self, ad: int, ctr: float) -> int:
        return int(self.uniforms(ad, 1)[0] < ctr)


def sample_click(env: AuctionEnv, ad: int, stream: ClickStream) -> int:
    if not 0 <= ad < env.n:
        raise IndexError(f"ad {ad} out of range for {env.n} ads")
    return stream.click(ad, env.ctrs[ad])


class BatchClickStream:
    """Many runs' click streams side by side; run ``runs[k]`` sits in row ``k``.

    Produces exactly the same uniforms as :class:`ClickStream` for each run.
    """

    def __init__(self, master_seed: int, runs, n: int):
        self.runs = np.asarray(runs, dtype=np.int64)
        self._gens = [[_ad_generator(master_seed, int(r), i) for i in range(n)] for r in self.runs]
        size = len(self.runs)
        self._buf = np.empty((size, n, BLOCK))
        for k in range(size):
            for i in range(n):
                self._buf[k, i] = self._gens[k][i].random(BLOCK)
        self._block = np.zeros((size, n), dtype=np.int64)

    def draw(self, ads: np.ndarray, positions: np.ndarray) -> np.ndarray:
        """Uniform at ``positions[k]`` of ad ``ads[k]``'s stream, per row.

        Positions for a given (row, ad) must be requested in increasing order
        without skipping a block.
        """
        rows = np.arange(len(self.runs))
        blk = positions // BLOCK
        stale = np.nonzero(blk != self._block[rows, ads])[0]
        for k in stale:
            a = ads[k]
            while self._block[k, a] < blk[k]:
                self._buf[k, a] = self._gens[k][a].random(BLOCK)
                self._block[k, a] += 1
        return self._buf[rows, ads, positions % BLOCK]
