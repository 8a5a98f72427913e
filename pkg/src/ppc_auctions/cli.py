"""Command line entry point: ``ppc-auctions {simulate,sweep,ic-check,lower-bound,report}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .harness import ConfigError, load_config, read_csv, run_experiment, summarize
from .regret import lb_floor

EXIT_VALIDATION = 2
EXIT_ASSERT = 3

KINDS = {"simulate": "simulate", "sweep": "sweep", "ic-check": "ic_check", "lower-bound": "lower_bound"}


def _experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON experiment config; flags below override it")
    p.add_argument("--experiment-id")
    p.add_argument("--mechanism", choices=["oracle", "ucb", "etc"])
    p.add_argument("--ctrs", type=float, nargs="+")
    p.add_argument("--values", type=float, nargs="+", help="fixed per-click values, one per ad")
    p.add_argument("--horizons", type=int, nargs="+")
    p.add_argument("--seeds", type=int)
    p.add_argument("--master-seed", type=int)
    p.add_argument("--output")
    p.add_argument("--workers", type=int)
    p.add_argument("--record-timing", action="store_true", default=None)
    p.add_argument("--bonus-variant", choices=["analysis_log2nT", "literal_logT"])
    p.add_argument("--accounting", choices=["expected", "realized"])
    p.add_argument("--include-warmstart", action="store_true", default=None)
    p.add_argument("--exclude-exploration", action="store_true", default=None)
    p.add_argument("--exploration-budget", type=int)
    p.add_argument("--ic-states", type=int)


def _build_config(args: argparse.Namespace) -> dict:
    data = json.loads(args.config.read_text()) if args.config else {}
    data["experiment"] = KINDS[args.command]
    for flag, key in [
        ("experiment_id", "experiment_id"),
        ("mechanism", "mechanism"),
        ("horizons", "horizons"),
        ("seeds", "seeds"),
        ("master_seed", "master_seed"),
        ("output", "output"),
        ("workers", "workers"),
        ("record_timing", "record_timing"),
    ]:
        if getattr(args, flag) is not None:
            data[key] = getattr(args, flag)
    if args.ctrs is not None or args.values is not None:
        env = dict(data.get("env") or {})
        if args.ctrs is not None:
            env["ctrs"] = args.ctrs
        if args.values is not None:
            env.pop("table", None)
            env.pop("random_table", None)
            env["values"] = args.values
        data["env"] = env
    mc = dict(data.get("mechanism_config") or {})
    for flag, key, val in [
        ("bonus_variant", "bonus_variant", args.bonus_variant),
        ("accounting", "accounting", args.accounting),
        ("include_warmstart", "include_warmstart_in_regret", args.include_warmstart),
        ("exclude_exploration", "include_exploration_in_regret", None if args.exclude_exploration is None else False),
        ("exploration_budget", "exploration_budget", args.exploration_budget),
    ]:
        if val is not None:
            mc[key] = val
    data["mechanism_config"] = mc
    if args.ic_states is not None:
        data.setdefault("ic", {})["states"] = args.ic_states
    return data


def _check_report(summaries, args) -> list[str]:
    failures = []
    for s in summaries:
        if args.slope_range is not None:
            lo, hi = args.slope_range
            if s.slope is None or not lo <= s.slope <= hi:
                failures.append(f"{s.experiment_id}: slope {s.slope} outside [{lo}, {hi}]")
        for h in s.per_T:
            if args.max_regret_per_t is not None and h.mean_regret_per_T > args.max_regret_per_t:
                failures.append(f"{s.experiment_id} T={h.T}: mean regret/T {h.mean_regret_per_T:.6g} > {args.max_regret_per_t}")
            if args.lb_floor and h.worst_mean < lb_floor(h.T) - 2 * h.worst_se:
                failures.append(f"{s.experiment_id} T={h.T}: worst mean regret {h.worst_mean:.6g} below sqrt(T)/64 - 2 SE")
    return failures


def _report(args) -> int:
    rows = [r for p in args.csv for r in read_csv(p)]
    summaries = summarize(rows)
    doc = [s.to_json() for s in summaries]
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    if args.check:
        failures = _check_report(summaries, args)
        for f in failures:
            print(f"FAIL {f}", file=sys.stderr)
        if failures:
            return EXIT_ASSERT
        print("all report assertions passed", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ppc-auctions", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in KINDS:
        _experiment_flags(sub.add_parser(name, help=f"run a {KINDS[name]} experiment"))
    rep = sub.add_parser("report", help="summarize result CSVs into JSON")
    rep.add_argument("csv", nargs="+", type=Path)
    rep.add_argument("--output", type=Path)
    rep.add_argument("--assert", dest="check", action="store_true", help="exit 3 if any threshold below fails")
    rep.add_argument("--slope-range", type=float, nargs=2, metavar=("LO", "HI"))
    rep.add_argument("--max-regret-per-t", type=float)
    rep.add_argument("--lb-floor", action="store_true", help="worst mean regret >= sqrt(T)/64 - 2 SE")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "report":
            return _report(args)
        summary = run_experiment(load_config(_build_config(args)))
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(exc, file=sys.stderr)
        return 1
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
