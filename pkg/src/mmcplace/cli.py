"""Command-line entry points.

Subcommands:
  simulate       run placement policies over a scenario, write CSVs
  sweep-window   grid of policy-e runs over window lengths and error rates
  oracle-check   spot-check predicted-vs-actual cost error against the bound
  convert-trace  normalize raw per-vehicle GPS logs into the trace CSV format

Exit codes: 0 ok, 1 oracle-check failure, 2 configuration error,
3 trace I/O error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from .config import ConfigError, ScenarioConfig, parse_config
from .core import ServiceInstance, Window
from .costs import WindowCostEvaluator
from .predictor import CostOracle, PowerLawErrorBound
from .simulator import (POLICIES, build_scenario, run_policy, sweep_window,
                        write_results_csv, write_summary_csv, write_sweep_csv)

log = logging.getLogger("mmcplace")


def _setup_logging():
    level = os.environ.get("MMCPLACE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _load_config(path: str | None) -> ScenarioConfig:
    if not path:
        return ScenarioConfig()
    return parse_config(path)


def _cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    if args.slots:
        cfg.horizon = args.slots
    if args.window:
        cfg.window_T = args.window
    seed = args.seed if args.seed is not None else cfg.master_seed
    policies = list(POLICIES) if args.policy == "all" else [args.policy]
    scn = build_scenario(cfg, seed)
    log.info("scenario: %d cells, %d instances, horizon %d",
             cfg.n_cells, len(scn.instances), cfg.horizon)
    if args.jobs > 1 and len(policies) > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(lambda p: run_policy(scn, p), policies))
    else:
        results = [run_policy(scn, pol) for pol in policies]
    for res in results:
        pol = res.policy
        extra = f" T={res.window_T}" if res.window_T else ""
        print(f"policy {pol}: avg_cost={res.avg_cost:.4f} "
              f"runtime={res.runtime_ms:.0f}ms{extra}")
        for flag in set(res.flags):
            log.warning("policy %s: %s", pol, flag)
    os.makedirs(args.out_dir, exist_ok=True)
    write_results_csv(os.path.join(args.out_dir, "results.csv"), results)
    write_summary_csv(os.path.join(args.out_dir, "summary.csv"), results)
    print(f"wrote {args.out_dir}/results.csv and {args.out_dir}/summary.csv")
    return 0


def _parse_range(spec: str) -> list[int]:
    if ":" in spec:
        lo, hi = spec.split(":", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in spec.split(",") if x]


def _cmd_sweep_window(args) -> int:
    cfg = _load_config(args.config)
    if args.slots:
        cfg.horizon = args.slots
    T_values = _parse_range(args.T_range)
    beta_values = [float(x) for x in args.beta_list.split(",") if x]
    seeds = list(range(1, args.seeds + 1))
    rows = sweep_window(cfg, T_values, beta_values, seeds, jobs=args.jobs)
    os.makedirs(args.out_dir, exist_ok=True)
    out = os.path.join(args.out_dir, "sweep.csv")
    write_sweep_csv(out, rows)
    print(f"wrote {out} ({len(rows)} rows)")
    return 0


def _cmd_oracle_check(args) -> int:
    cfg = _load_config(args.config)
    seed = args.seed if args.seed is not None else cfg.master_seed
    scn = build_scenario(cfg, seed)
    bound = PowerLawErrorBound(cfg.beta, cfg.alpha)
    oracle = CostOracle(scn.model, bound, seed=seed,
                        noise_shape=cfg.noise_shape, spread=cfg.noise_spread)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=[seed, 404]))
    T = args.window or 8
    window = Window(1, T)
    insts = [ServiceInstance(id=j + 1, arrival_slot=1, user_id=None)
             for j in range(4)]
    predicted = oracle.predicted_model(1, window)
    actual_ev = WindowCostEvaluator(window, insts, scn.model)
    pred_ev = WindowCostEvaluator(window, insts, predicted)
    worst = 0.0
    violations = 0
    for _ in range(args.samples):
        states = [tuple(int(rng.integers(1, scn.model.K + 1))
                        for _ in insts) for _ in window.slots]
        prev = None
        for q, t in enumerate(window.slots):
            a = actual_ev.local(t, states[q])
            d = pred_ev.local(t, states[q])
            gap = abs(a - d)
            eps = bound.epsilon(t - 1)
            worst = max(worst, gap - eps)
            if gap > eps + 1e-9:
                violations += 1
            prev = states[q]
    if violations:
        print(f"FAIL: {violations} samples exceeded the error bound "
              f"(worst excess {worst:.3e})")
        return 1
    print(f"ok: {args.samples} sampled states within the bound "
          f"(max slack used {worst:.3e})")
    return 0


def _cmd_convert_trace(args) -> int:
    """Raw per-vehicle logs ('lat lon occupancy timestamp' lines, one file
    per vehicle) -> normalized user_id,timestamp,lat,lon CSV."""
    import csv

    rows = []
    malformed = 0
    try:
        paths = sorted(args.inputs)
        for uid, path in enumerate(paths, start=1):
            with open(path) as fh:
                for line in fh:
                    parts = line.split()
                    if len(parts) != 4:
                        malformed += 1
                        continue
                    try:
                        lat, lon = float(parts[0]), float(parts[1])
                        ts = float(parts[3])
                    except ValueError:
                        malformed += 1
                        continue
                    rows.append((uid, ts, lat, lon))
    except OSError as exc:
        print(f"trace I/O error: {exc}", file=sys.stderr)
        return 3
    rows.sort(key=lambda r: (r[0], r[1]))
    try:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["user_id", "timestamp", "lat", "lon"])
            writer.writerows(rows)
    except OSError as exc:
        print(f"trace I/O error: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {args.out}: {len(rows)} fixes from {len(args.inputs)} "
          f"users, {malformed} malformed lines skipped")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mmcplace",
                                description="micro-cloud service placement "
                                            "experiments")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run placement policies")
    sim.add_argument("--config", default=None, help="INI scenario config")
    sim.add_argument("--policy", default="all",
                     choices=list(POLICIES) + ["all"])
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--slots", type=int, default=0,
                     help="override horizon length")
    sim.add_argument("--window", type=int, default=0,
                     help="fixed look-ahead window (0 = optimizer's choice)")
    sim.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                     help="parallel policy runs (results stay order-stable)")
    sim.add_argument("--out-dir", default="out")
    sim.set_defaults(func=_cmd_simulate)

    sw = sub.add_parser("sweep-window", help="policy-e cost vs window length")
    sw.add_argument("--config", default=None)
    sw.add_argument("--slots", type=int, default=0)
    sw.add_argument("--T-range", dest="T_range", default="1:30",
                    help="lo:hi or comma list of window lengths")
    sw.add_argument("--beta-list", dest="beta_list", default="0.1,0.4")
    sw.add_argument("--seeds", type=int, default=8,
                    help="run seeds 1..N")
    sw.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                    help="parallel window-length runs per seed")
    sw.add_argument("--out-dir", default="out")
    sw.set_defaults(func=_cmd_sweep_window)

    oc = sub.add_parser("oracle-check",
                        help="verify predicted costs respect the error bound")
    oc.add_argument("--config", default=None)
    oc.add_argument("--seed", type=int, default=None)
    oc.add_argument("--window", type=int, default=0)
    oc.add_argument("--samples", type=int, default=200)
    oc.set_defaults(func=_cmd_oracle_check)

    ct = sub.add_parser("convert-trace",
                        help="normalize raw GPS logs into the trace format")
    ct.add_argument("inputs", nargs="+", help="per-vehicle log files")
    ct.add_argument("--out", required=True)
    ct.set_defaults(func=_cmd_convert_trace)
    return p


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
