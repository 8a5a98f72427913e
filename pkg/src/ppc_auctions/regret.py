"""Regret against the known-CTR second-price benchmark, and the two-instance lower-bound construction."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .batch import simulate_many
from .env import AuctionEnv, fixed_env, value_at
from .mechanisms import MechanismConfig, RunRecord
from .stats import smax


def opt_benchmark(env: AuctionEnv) -> tuple[list[float], float]:
    """Per-round second-highest true eCPM and its sum over the horizon."""
    per_round = [smax([r * v for r, v in zip(env.ctrs, value_at(env, t))]) for t in range(1, env.horizon + 1)]
    return per_round, math.fsum(per_round)


def compute_regret(run: RunRecord, env: AuctionEnv) -> float:
    """OPT minus the run's revenue, counting the same rounds the run charged to OPT."""
    if run.horizon != env.horizon:
        raise ValueError(f"run horizon {run.horizon} does not match env horizon {env.horizon}")
    per_round, _ = opt_benchmark(env)
    opt = math.fsum(per_round[run.uncounted_rounds:])
    if run.warmstart_counted and per_round:
        opt += run.warmstart_counted * per_round[0]
    return opt - run.total_revenue


@dataclass(frozen=True)
class LowerBoundPair:
    """Two four-ad, unit-value instances that differ only in which pair gets the +eps/2 CTR boost."""

    T: int
    epsilon: float
    env_1: AuctionEnv
    env_2: AuctionEnv


def make_lb_pair(T: int, master_seed: int = 0) -> LowerBoundPair:
    if T < 1:
        raise ValueError("horizon must be at least 1")
    eps = 1.0 / (8.0 * math.sqrt(T))
    hi = 0.5 + eps / 2
    ones = (1.0, 1.0, 1.0, 1.0)
    return LowerBoundPair(
        T,
        eps,
        fixed_env((hi, hi, 0.5, 0.5), ones, T, master_seed),
        fixed_env((0.5, 0.5, hi, hi), ones, T, master_seed),
    )


def lb_floor(T: int) -> float:
    """Minimax regret floor sqrt(T)/64 for the pair."""
    return math.sqrt(T) / 64


def mean_and_se(xs) -> tuple[float, float]:
    xs = [float(x) for x in xs]
    if not xs:
        raise ValueError("no samples")
    mean = math.fsum(xs) / len(xs)
    if len(xs) < 2:
        return mean, float("nan")
    var = math.fsum((x - mean) ** 2 for x in xs) / (len(xs) - 1)
    return mean, math.sqrt(var / len(xs))


@dataclass(frozen=True)
class ProbeResult:
    mean_1: float
    mean_2: float
    se_1: float
    se_2: float

    @property
    def worst(self) -> float:
        return max(self.mean_1, self.mean_2)

    @property
    def worst_se(self) -> float:
        return self.se_1 if self.mean_1 >= self.mean_2 else self.se_2


def minimax_regret_probe(mechanism: str, pair: LowerBoundPair, seeds: int, config: MechanismConfig = MechanismConfig()) -> ProbeResult:
    """Monte Carlo mean regret on both instances; both use the same click streams per seed."""
    if seeds < 1:
        raise ValueError("need at least one seed")
    res = []
    for env in (pair.env_1, pair.env_2):
        runs = simulate_many(mechanism, env, config, range(seeds))
        res.append(mean_and_se([r.total_regret for r in runs]))
    (m1, s1), (m2, s2) = res
    return ProbeResult(m1, m2, s1, s2)


def upper_envelope(env: AuctionEnv) -> float:
    """Worst-case regret ceiling M * sum_i sqrt(24 T ln(2nT)) / rho_i + M / T.

    M is the largest per-round second-highest true eCPM.
    """
    T, n = env.horizon, env.n
    if T < 1:
        return 0.0
    per_round, _ = opt_benchmark(env)
    M = max(per_round)
    root = math.sqrt(24 * T * math.log(2 * n * T))
    return M * sum(root / r for r in env.ctrs) + M / T

