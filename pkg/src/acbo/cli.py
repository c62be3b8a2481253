"""Command-line front end: run experiments, recompute regret, aggregate
plot-ready curves, and probe reward structure."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from .distributed import check_dr_submodular, curvature_estimate
from .envs import function_networks as fnet
from .harness import (
    ExperimentConfig,
    RunLog,
    emit_csv,
    hindsight_regret,
    make_environment,
    run_experiment,
)


def _parse_seeds(text: str) -> tuple[int, ...]:
    if ".." in text:
        lo, hi = text.split("..")
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(s) for s in text.split(","))


def _cmd_run(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    if args.seeds:
        config.seeds = _parse_seeds(args.seeds)
    out_dir = Path(args.out or config.out or "runs")
    logs = run_experiment(config)
    name = f"{config.env.get('name')}_{config.algorithm}"
    rows_path, summary_path = emit_csv(logs, out_dir / f"{name}.csv")
    print(f"wrote {rows_path}")
    print(f"wrote {summary_path}")
    return 0


def _cmd_regret(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    env = make_environment(config.env)
    by_seed: dict[int, list[dict]] = defaultdict(list)
    with open(args.runlog, newline="") as fh:
        for row in csv.DictReader(fh):
            by_seed[int(row["seed"])].append(row)
    out = ["seed,round,regret"]
    for seed, rows in sorted(by_seed.items()):
        rows.sort(key=lambda r: int(r["round"]))
        log = RunLog(
            env=rows[0]["env"], algorithm=rows[0]["algorithm"], seed=seed,
            agent_actions=np.array([int(r["agent_action"]) for r in rows]),
            adversary_actions=np.array([int(r["adversary_action"]) for r in rows]),
            rewards=np.array([float(r["reward"]) for r in rows]),
            expected_rewards=np.array([float(r["expected_reward"]) for r in rows]),
            regret=np.zeros(len(rows)),
        )
        curve = hindsight_regret(log, env, sampled_actions=args.sampled_actions)
        for t, v in enumerate(curve, start=1):
            out.append(f"{seed},{t},{v:.10g}")
    Path(args.out).write_text("\n".join(out) + "\n")
    print(f"wrote {args.out}")
    return 0


def _cmd_plot_data(args) -> int:
    """Aggregate run CSVs into per-(env, algorithm, round) mean +/- stderr."""
    series: dict[tuple, dict[int, list[float]]] = defaultdict(lambda: defaultdict(list))
    for path in sorted(Path(args.runs).glob("*.csv")):
        if path.stem.endswith("_summary"):
            continue
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                key = (row["env"], row["algorithm"])
                series[key][int(row["round"])].append(float(row["regret"]))
    out = ["env,algorithm,round,mean_regret,stderr_regret"]
    for (env_name, alg), per_round in sorted(series.items()):
        for t in sorted(per_round):
            vals = np.array(per_round[t])
            se = vals.std(ddof=1) / math.sqrt(len(vals)) if len(vals) > 1 else 0.0
            out.append(f"{env_name},{alg},{t},{vals.mean():.10g},{se:.10g}")
    Path(args.out).write_text("\n".join(out) + "\n")
    print(f"wrote {args.out}")
    return 0


_REWARDS = {
    "linear": lambda x: float(np.sum(x)) / max(len(x), 1),
    "coverage": lambda x: float(1.0 - np.prod(1.0 - np.asarray(x))),
    "sum_squares": lambda x: float(np.sum(np.asarray(x) ** 2)),
}


def _cmd_check_submodular(args) -> int:
    if args.env:
        env = fnet.make_env(args.env)
        adv_mid = [0.5 * sum(nd.adversary_map.box) for nd in env.nodes
                   if nd.adversary_map is not None]
        fn = lambda x: float(env.raw_reward(list(x), adv_mid))
        dims = len(env.agent_nodes)
        lo, hi = 0.0, 1.0
        boxes = [env.nodes[n].agent_map.box for n in env.agent_nodes]
        grid = [np.linspace(b[0], b[1], args.grid) for b in boxes]
    else:
        fn = _REWARDS[args.reward]
        dims = args.dims
        grid = [np.linspace(0.0, 1.0, args.grid)] * dims
    report = check_dr_submodular(fn, grid, tolerance=args.tolerance)
    print(f"grid points:          {report.grid_points}")
    print(f"comparable pairs:     {report.pairs_checked}")
    print(f"increments checked:   {report.increments_checked}")
    print(f"DR violations:        {report.dr_violations} "
          f"(worst gap {report.worst_dr_gap:.3g})")
    print(f"monotone violations:  {report.monotone_violations} "
          f"(worst gap {report.worst_monotone_gap:.3g})")
    print(f"DR-submodular:        {report.is_dr_submodular}")
    print(f"monotone:             {report.is_monotone}")
    if not args.env:
        adv_seq = [None] * 3
        oracle = lambda x, _adv: fn(np.asarray(x))
        try:
            c_avg, c_wc = curvature_estimate(oracle, adv_seq, a_max=0.25, dims=dims)
            print(f"curvature (avg, wc):  ({c_avg:.4f}, {c_wc:.4f})")
        except Exception as exc:  # vanishing base gradient etc.
            print(f"curvature:            unavailable ({exc})")
    return 0 if report.is_dr_submodular else 1


def _cmd_list_envs(args) -> int:
    for name in fnet.ENV_NAMES:
        env = fnet.make_env(name)
        print(f"{name}: {len(env.agent_nodes)} agent slots x K, "
              f"{len(env.adversary_nodes)} adversary slots x K', "
              f"{len(env.unknown_nodes)} unknown nodes")
    print("sms_synthetic: clustered depots/regions, Poisson demand "
          "(depots, regions, days, intensity, layout_seed, demand_seed)")
    print("sms_csv: trip + covariate CSVs with a JSON depot/region layout")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="acbo",
                                     description="adversarial causal BO toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config across seeds")
    p.add_argument("--config", required=True)
    p.add_argument("--seeds", help="e.g. 0..9 or 0,3,7")
    p.add_argument("--out", help="output directory (default from config)")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("regret", help="recompute hindsight regret for a run log")
    p.add_argument("--config", required=True)
    p.add_argument("--runlog", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sampled-actions", type=int, default=0,
                   help="sampled-max fallback size for huge action spaces")
    p.set_defaults(fn=_cmd_regret)

    p = sub.add_parser("plot-data", help="aggregate run CSVs into regret curves")
    p.add_argument("--runs", required=True, help="directory of run CSVs")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_plot_data)

    p = sub.add_parser("check-submodular", help="reward structure diagnostics")
    p.add_argument("--reward", choices=sorted(_REWARDS), default="coverage")
    p.add_argument("--env", choices=fnet.ENV_NAMES)
    p.add_argument("--dims", type=int, default=2)
    p.add_argument("--grid", type=int, default=5)
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.set_defaults(fn=_cmd_check_submodular)

    p = sub.add_parser("list-envs", help="list registered environments")
    p.set_defaults(fn=_cmd_list_envs)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
