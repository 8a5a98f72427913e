"""Experiment orchestration: validated JSON configs, seed sweeps, CSV/JSON artifacts and summaries."""

from __future__ import annotations

import csv
import enum
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Annotated, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from . import bidders
from .batch import simulate_many
from .env import AuctionEnv, adversarial_env, fixed_env
from .ic_verify import (
    allocation_monotone,
    deviation_grid,
    global_ic_check,
    myerson_identity_residual,
    random_stage_states,
    stage_ic_check,
)
from .mechanisms import MECHANISMS, MechanismConfig
from .regret import lb_floor, make_lb_pair, mean_and_se
from .stats import BonusVariant

log = logging.getLogger(__name__)

CSV_COLUMNS = [
    "experiment_id",
    "mechanism",
    "T",
    "seed",
    "total_opt",
    "total_revenue",
    "total_regret",
    "exploration_rounds",
    "clear_winner",
    "wall_ms",
]


class ConfigError(ValueError):
    """Invalid experiment config; the message names the offending field path."""


class Kind(str, enum.Enum):
    SIMULATE = "simulate"
    SWEEP = "sweep"
    IC_CHECK = "ic_check"
    LOWER_BOUND = "lower_bound"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class RandomTable(_Strict):
    low: float = Field(0.1, gt=0)
    high: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def _order(self):
        if self.high < self.low:
            raise ValueError("high must be >= low")
        return self


Ctr = Annotated[float, Field(gt=0, lt=1)]
Positive = Annotated[float, Field(gt=0)]


class EnvSpec(_Strict):
    ctrs: list[Ctr] = Field(min_length=2)
    values: list[Positive] | None = None
    table: list[list[Positive]] | None = None
    random_table: RandomTable | None = None

    @model_validator(mode="after")
    def _one_schedule(self):
        given = [x is not None for x in (self.values, self.table, self.random_table)]
        if sum(given) != 1:
            raise ValueError("give exactly one of values, table, random_table")
        rows = [self.values] if self.values is not None else self.table or []
        if any(len(r) != len(self.ctrs) for r in rows):
            raise ValueError("need one value per ad")
        return self

    def build(self, horizon: int, master_seed: int) -> AuctionEnv:
        if self.values is not None:
            return fixed_env(self.ctrs, self.values, horizon, master_seed)
        if self.table is not None:
            return adversarial_env(self.ctrs, self.table, master_seed)
        rng = np.random.default_rng([master_seed, horizon, 0x7AB1E])
        tab = rng.uniform(self.random_table.low, self.random_table.high, (horizon, len(self.ctrs)))
        return adversarial_env(self.ctrs, tab, master_seed)


class MechanismSpec(_Strict):
    bonus_variant: BonusVariant = BonusVariant.ANALYSIS
    accounting: Literal["expected", "realized"] = "expected"
    include_warmstart_in_regret: bool = False
    include_exploration_in_regret: bool = True
    exploration_budget: int | None = Field(None, ge=1)
    cap_bids_at_value: bool = False


class DeviationSpec(_Strict):
    kind: Literal["truthful", "scaled", "fixed", "zero_then_truthful"]
    factor: float | None = Field(None, gt=0)
    start: int | None = Field(None, ge=1)
    stop: int | None = Field(None, ge=1)
    bid: float | None = Field(None, ge=0)
    switch: int | None = Field(None, ge=1)

    @model_validator(mode="after")
    def _complete(self):
        self.policy()
        return self

    def policy(self) -> bidders.BidPolicy:
        try:
            if self.kind == "truthful":
                return bidders.Truthful()
            if self.kind == "scaled":
                return bidders.ScaledBid(self.factor, self.start, self.stop)
            if self.kind == "fixed":
                return bidders.FixedDeviation(self.start, self.stop, self.bid)
            return bidders.ZeroThenTruthful(self.switch)
        except TypeError:
            raise ValueError(f"missing parameters for a {self.kind!r} deviation") from None


class IcSpec(_Strict):
    states: int = Field(1000, ge=1)
    grid_points: int = Field(101, ge=2)
    deviations: list[DeviationSpec] = Field(default_factory=list)


class ExperimentConfig(_Strict):
    experiment: Kind
    experiment_id: str = "run"
    mechanism: str = "ucb"
    mechanism_config: MechanismSpec = Field(default_factory=MechanismSpec)
    env: EnvSpec | None = None
    horizons: list[int] = Field(min_length=1)
    seeds: int = Field(ge=1)
    master_seed: int = Field(0, ge=0, lt=2**64)
    output: str = "results"
    workers: int | None = Field(None, ge=1)
    record_timing: bool = False
    ic: IcSpec = Field(default_factory=IcSpec)

    @model_validator(mode="after")
    def _check(self):
        if self.mechanism not in MECHANISMS:
            raise ValueError(f"mechanism must be one of {sorted(MECHANISMS)}")
        if any(T < 1 for T in self.horizons):
            raise ValueError("horizons must be positive")
        if self.experiment is Kind.SWEEP and any(b <= a for a, b in zip(self.horizons, self.horizons[1:])):
            raise ValueError("sweep horizons must be strictly increasing")
        if self.experiment in (Kind.SIMULATE, Kind.IC_CHECK) and len(self.horizons) != 1:
            raise ValueError(f"{self.experiment.value} takes exactly one horizon")
        if self.experiment is not Kind.LOWER_BOUND and self.env is None:
            raise ValueError("env is required")
        if self.env is not None and self.env.table is not None and self.horizons != [len(self.env.table)]:
            raise ValueError("an inline table fixes the horizon to its row count")
        if self.experiment is Kind.IC_CHECK and (self.env is None or self.env.values is None):
            raise ValueError("ic_check needs fixed values")
        return self

    def mech_config(self) -> MechanismConfig:
        return MechanismConfig(**self.mechanism_config.model_dump())


def load_config(data: dict | str | os.PathLike) -> ExperimentConfig:
    """Validate a config mapping or JSON file, raising :class:`ConfigError` with field paths."""
    if not isinstance(data, dict):
        with open(data) as fh:
            data = json.load(fh)
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        msgs = []
        for err in exc.errors():
            path = ".".join(str(p) for p in err["loc"]) or "<root>"
            msgs.append(f"{path}: {err['msg']}")
        raise ConfigError("; ".join(msgs)) from None


def fit_loglog_slope(points) -> float:
    """Least-squares slope of ln y against ln T."""
    pts = [(float(T), float(y)) for T, y in points]
    if len(pts) < 2:
        raise ValueError("need at least two points")
    if any(y <= 0 for _, y in pts):
        raise ValueError("log-log fit needs positive y")
    Ts = [T for T, _ in pts]
    if any(b <= a for a, b in zip(Ts, Ts[1:])):
        raise ValueError("T must be strictly increasing")
    x = np.log(Ts)
    y = np.log([y for _, y in pts])
    return float(np.polyfit(x, y, 1)[0])


@dataclass
class Row:
    experiment_id: str
    mechanism: str
    T: int
    seed: int
    total_opt: float
    total_revenue: float
    total_regret: float
    exploration_rounds: int | None = None
    clear_winner: int | None = None
    wall_ms: float | None = None


@dataclass
class HorizonStats:
    T: int
    instances: dict[str, tuple[float, float]]  # label -> (mean regret, standard error)
    worst_mean: float
    worst_se: float
    mean_regret_per_T: float
    negative_fraction: float


@dataclass
class SweepSummary:
    experiment_id: str
    mechanism: str
    per_T: list[HorizonStats]
    slope: float | None
    rows: list[Row] = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        out = {
            "experiment_id": self.experiment_id,
            "mechanism": self.mechanism,
            "slope": self.slope,
            "per_T": [asdict(h) for h in self.per_T],
        }
        for h in out["per_T"]:
            h["instances"] = {k: {"mean": m, "se": _finite(s)} for k, (m, s) in h["instances"].items()}
            h["worst_se"] = _finite(h["worst_se"])
            h["lb_floor"] = lb_floor(h["T"])
        return out


def _finite(x: float) -> float | None:
    return x if math.isfinite(x) else None


def summarize(rows: list[Row]) -> list[SweepSummary]:
    """Per-experiment, per-T regret statistics.

    Rows whose ids share a prefix before ``:`` are instances of one
    experiment (the two lower-bound environments); ``worst_mean`` is the
    larger of their means. The log-log slope uses ``worst_mean`` and is only
    reported when every one of them is positive.
    """
    groups: dict[str, dict[int, dict[str, list[Row]]]] = {}
    mech: dict[str, str] = {}
    for r in rows:
        base, _, label = r.experiment_id.partition(":")
        groups.setdefault(base, {}).setdefault(r.T, {}).setdefault(label or base, []).append(r)
        mech[base] = r.mechanism
    out = []
    for base in sorted(groups):
        per_T = []
        for T in sorted(groups[base]):
            inst = {lab: mean_and_se([r.total_regret for r in rs]) for lab, rs in sorted(groups[base][T].items())}
            worst = max(inst, key=lambda k: inst[k][0])
            every = [r for rs in groups[base][T].values() for r in rs]
            neg = sum(r.total_regret < 0 for r in every) / len(every)
            m, s = inst[worst]
            per_T.append(HorizonStats(T, inst, m, s, m / T, neg))
        slope = None
        if len(per_T) >= 2 and all(h.worst_mean > 0 for h in per_T):
            slope = fit_loglog_slope([(h.T, h.worst_mean) for h in per_T])
        out.append(SweepSummary(base, mech[base], per_T, slope, [r for T in groups[base].values() for rs in T.values() for r in rs]))
    return out


def _fmt(x) -> str:
    if x is None:
        return ""
    return repr(float(x)) if isinstance(x, float) else str(x)


def write_csv(rows: list[Row], path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    Path(path).write_text(buf.getvalue())


def read_csv(path) -> list[Row]:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            missing = set(CSV_COLUMNS) - set(rec)
            if missing:
                raise ConfigError(f"{path}: missing columns {sorted(missing)}")

            def opt(name, cast):
                return cast(rec[name]) if rec[name] != "" else None

            rows.append(
                Row(
                    rec["experiment_id"],
                    rec["mechanism"],
                    int(rec["T"]),
                    int(rec["seed"]),
                    float(rec["total_opt"]),
                    float(rec["total_revenue"]),
                    float(rec["total_regret"]),
                    opt("exploration_rounds", int),
                    opt("clear_winner", int),
                    opt("wall_ms", float),
                )
            )
    return rows


def _work(item) -> list[Row]:
    exp_id, mechanism, env, cfg, seeds, timing = item
    t0 = time.perf_counter()
    runs = simulate_many(mechanism, env, cfg, seeds)
    per_run_ms = (time.perf_counter() - t0) * 1000 / len(seeds) if timing else None
    return [
        Row(
            exp_id,
            mechanism,
            env.horizon,
            r.seed,
            r.total_opt,
            r.total_revenue,
            r.total_regret,
            r.exploration_rounds,
            r.clear_winner,
            per_run_ms,
        )
        for r in runs
    ]


def _items(cfg: ExperimentConfig):
    mc = cfg.mech_config()
    seeds = list(range(cfg.seeds))
    for T in cfg.horizons:
        if cfg.experiment is Kind.LOWER_BOUND:
            pair = make_lb_pair(T, cfg.master_seed)
            yield (f"{cfg.experiment_id}:env1", cfg.mechanism, pair.env_1, mc, seeds, cfg.record_timing)
            yield (f"{cfg.experiment_id}:env2", cfg.mechanism, pair.env_2, mc, seeds, cfg.record_timing)
        else:
            env = cfg.env.build(T, cfg.master_seed)
            yield (cfg.experiment_id, cfg.mechanism, env, mc, seeds, cfg.record_timing)


def _run_items(items, workers: int | None) -> list[Row]:
    workers = workers or os.cpu_count() or 1
    if workers == 1 or len(items) == 1:
        chunks = [_work(it) for it in items]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
            chunks = list(pool.map(_work, items))
    rows = [r for chunk in chunks for r in chunk]
    # single ordered merge regardless of which worker finished first
    rows.sort(key=lambda r: (r.T, r.experiment_id, r.seed))
    return rows


def run_experiment(config: ExperimentConfig | dict) -> dict:
    """Run a configured experiment and write its artifacts under ``config.output``.

    Returns the JSON summary that is also written to ``summary.json``.
    """
    cfg = config if isinstance(config, ExperimentConfig) else load_config(config)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.experiment is Kind.IC_CHECK:
        summary = run_ic_check(cfg, out)
    else:
        rows = _run_items(list(_items(cfg)), cfg.workers)
        write_csv(rows, out / "results.csv")
        (sweep,) = summarize(rows)
        summary = {"kind": cfg.experiment.value, **sweep.to_json()}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    log.info("wrote %s", out)
    return summary


def default_deviations(T: int) -> list[bidders.BidPolicy]:
    """One member of each scripted family, plus a late overbid."""
    return [
        bidders.ScaledBid(1.5),
        bidders.ScaledBid(0.5),
        bidders.FixedDeviation(1, T, 0.0),
        bidders.FixedDeviation(max(1, T // 2), T, 2.0),
        bidders.ZeroThenTruthful(max(1, T // 2)),
    ]


def run_ic_check(cfg: ExperimentConfig, out: Path) -> dict:
    rng = np.random.default_rng([cfg.master_seed, 0x1C])
    stage_worst = -math.inf
    myerson_worst = 0.0
    monotone = True
    for est, bids, ad, value, ctr in random_stage_states(rng, cfg.ic.states):
        grid = deviation_grid(est, bids, ad, value, cfg.ic.grid_points)
        stage_worst = max(stage_worst, stage_ic_check(est, bids, ad, value, ctr, grid).max_gain)
        myerson_worst = max(myerson_worst, abs(myerson_identity_residual(est, bids, ad, ctr)))
        monotone &= allocation_monotone(est, bids, ad, grid)

    env = cfg.env.build(cfg.horizons[0], cfg.master_seed)
    mc = cfg.mech_config()
    pols = [d.policy() for d in cfg.ic.deviations] or default_deviations(env.horizon)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["deviation", "ad", "seed", "delta"])
    global_worst = -math.inf
    for pol in pols:
        for ad in range(env.n):
            for seed in range(cfg.seeds):
                d = global_ic_check(env, ad, pol, mc, seed, cfg.mechanism)
                global_worst = max(global_worst, d)
                w.writerow([repr(pol), ad, seed, repr(d)])
    (out / "ic_deltas.csv").write_text(buf.getvalue())
    return {
        "kind": cfg.experiment.value,
        "experiment_id": cfg.experiment_id,
        "mechanism": cfg.mechanism,
        "stage_ic_max_gain": stage_worst,
        "myerson_max_abs_residual": myerson_worst,
        "allocation_monotone": monotone,
        "global_ic_max_delta": global_worst,
    }
