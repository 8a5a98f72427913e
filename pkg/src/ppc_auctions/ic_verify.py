"""Checks that truthful bidding is a best response, one round at a time and over a whole horizon.

The per-round checks work on a frozen score vector, since that is the only
thing a bid can be ranked against in a given round. Utilities are expected
utilities (CTR times surplus per click), never sampled.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .bidders import deviate, truthful
from .env import AuctionEnv
from .mechanisms import MechanismConfig, _second_price, run_mechanism

TOL = 1e-9


@dataclass(frozen=True)
class DeviationReport:
    max_gain: float
    argmax_deviation: str
    tolerance: float = TOL

    @property
    def ok(self) -> bool:
        return self.max_gain <= self.tolerance


def win_threshold(estimates, bids, ad: int) -> float:
    """Smallest own bid at which ``ad`` matches the best rival score."""
    est = np.asarray(estimates, dtype=float)
    rival = max(est[j] * bids[j] for j in range(len(est)) if j != ad)
    return float(rival / est[ad])


def _with_bid(bids, ad: int, b: float) -> np.ndarray:
    out = np.array(bids, dtype=float)
    out[ad] = b
    return out


def stage_utility(estimates, bids, ad: int, value: float, ctr: float, b: float) -> float:
    """Expected utility of ``ad`` bidding ``b`` against frozen scores and fixed rival bids."""
    a, _, price = _second_price(estimates, _with_bid(bids, ad, b))
    return ctr * (value - price) if a == ad else 0.0


def deviation_grid(estimates, bids, ad: int, value: float, points: int = 101) -> np.ndarray:
    """``points`` bids on [0, 2v] plus the truthful bid and the win breakpoint one ulp either side."""
    theta = win_threshold(estimates, bids, ad)
    extra = [value, theta, np.nextafter(theta, np.inf), np.nextafter(theta, -np.inf)]
    grid = np.concatenate([np.linspace(0.0, 2.0 * value, points), extra])
    return np.unique(grid[grid >= 0])


def stage_ic_check(estimates, bids, ad: int, value: float, ctr: float = 1.0, grid=None) -> DeviationReport:
    """Best gain over truthful bidding across a bid grid, for one ad in one round.

    ``bids[ad]`` is ignored; the grid defaults to :func:`deviation_grid`.
    """
    if grid is None:
        grid = deviation_grid(estimates, bids, ad, value)
    grid = list(grid)
    if not grid:
        raise ValueError("empty bid grid")
    truth = stage_utility(estimates, bids, ad, value, ctr, value)
    gains = [stage_utility(estimates, bids, ad, value, ctr, b) - truth for b in grid]
    k = int(np.argmax(gains))
    return DeviationReport(float(gains[k]), f"bid={grid[k]!r}")


def allocation_monotone(estimates, bids, ad: int, grid) -> bool:
    """Winning never turns into losing as ``ad`` raises its bid."""
    wins = [_second_price(estimates, _with_bid(bids, ad, b))[0] == ad for b in sorted(grid)]
    return all(later or not w for w, later in zip(wins, wins[1:]))


def myerson_identity_residual(estimates, bids, ad: int, ctr: float = 1.0) -> float:
    """Mechanism's expected payment minus b*x(b) - integral_0^b x(z) dz.

    The click probability x(z) is 0 below the win threshold and ``ctr``
    above it, so the integral is ``ctr * max(0, b - threshold)``.
    """
    b = float(bids[ad])
    a, _, price = _second_price(estimates, bids)
    won = a == ad
    payment = ctr * price if won else 0.0
    x_b = ctr if won else 0.0
    integral = ctr * max(0.0, b - win_threshold(estimates, bids, ad))
    return payment - (b * x_b - integral)


def global_ic_check(
    env: AuctionEnv,
    ad: int,
    deviation,
    config: MechanismConfig = MechanismConfig(),
    seed: int = 0,
    mechanism: str = "etc",
) -> float:
    """Total expected utility of ``ad`` under ``deviation`` minus under truthful bidding.

    Both histories share the seed, so each ad's k-th impression gets the same
    click in either one.
    """
    cfg = replace(config, trace=False)
    honest = run_mechanism(mechanism, env, cfg, seed, truthful(env.n))
    lying = run_mechanism(mechanism, env, cfg, seed, deviate(env.n, ad, deviation))
    return float(lying.utilities[ad] - honest.utilities[ad])


def random_stage_states(rng: np.random.Generator, count: int, n_max: int = 5):
    """Random (estimates, bids, ad, value, ctr) tuples, a quarter of them with ``ad`` bidding at its threshold."""
    for k in range(count):
        n = int(rng.integers(2, n_max + 1))
        est = rng.uniform(0.05, 1.5, n)
        bids = rng.uniform(0.0, 2.0, n)
        if k % 7 == 0:
            bids[rng.integers(n)] = 0.0
        ad = int(rng.integers(n))
        value = float(rng.uniform(0.01, 2.0))
        ctr = float(rng.uniform(0.01, 0.99))
        if k % 4 == 0:
            bids[ad] = win_threshold(est, bids, ad)
        else:
            bids[ad] = value
        yield est, bids, ad, value, ctr

