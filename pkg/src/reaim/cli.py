"""Command line entry point: ``reaim run | sweep | oracle-check``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .harness import ScenarioConfig, emit, load_config, run_scenario, sweep
from .manycast import LPR, SPR, records_to_csv
from .oracle import check_feasible, random_tiny_instance, run_heuristic_on, solve_exact


def _csv_list(kind):
    def parse(text):
        return tuple(kind(x) for x in text.split(",") if x.strip())
    return parse


def _config(args) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    return cfg.override(algorithms=args.algorithms, kappas=args.kappa, erlangs=args.erlangs,
                        replications=getattr(args, "reps", None))


def cmd_run(args) -> int:
    cfg = _config(args)
    seed = cfg.base_seed if args.seed is None else args.seed
    results = run_scenario(cfg, seed, keep_records=True)
    out = Path(args.out_dir)
    emit(results, out, args.format)
    for r in results:
        (out / f"migration_log_{r.algorithm}.csv").write_text(records_to_csv(r.records),
                                                               encoding="utf-8")
        print(f"{r.algorithm}: cost {r.cost_no_migration:.1f} -> {r.cost_after:.1f} "
              f"(saving {100 * r.saving:.1f}%), {r.accepted} migrations accepted, "
              f"ended {r.termination}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    if args.seed is not None:
        cfg = cfg.override(base_seed=args.seed)
    results = sweep(cfg, workers=args.workers, progress=args.verbose)
    for path in emit(results, args.out_dir, args.format):
        print(path)
    return 0


def cmd_oracle_check(args) -> int:
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    failures = 0
    with (out / "oracle_check.csv").open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["instance", "single_pair", "algorithm", "oracle_cost", "heuristic_cost",
                         "feasible", "violations"])
        for i in range(args.instances):
            single = i % 2 == 1
            inst = random_tiny_instance(rng, single_pair=single)
            exact = solve_exact(inst)
            for alg in (SPR, LPR):
                plan, cost, _ = run_heuristic_on(inst, alg)
                ok, problems = check_feasible(inst, plan)
                bad = (not ok or cost < exact.cost - 1e-9
                       or (single and abs(cost - exact.cost) > 1e-9))
                failures += bad
                writer.writerow([i, int(single), alg, repr(round(exact.cost, 10)),
                                 repr(round(cost, 10)), int(ok), "; ".join(problems)])
    print(f"{args.instances} instances, {failures} failed checks")
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reaim", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML/JSON file with ScenarioConfig keys")
        p.add_argument("--seed", type=int)
        p.add_argument("--out-dir", default="results")
        p.add_argument("--algorithms", type=_csv_list(str))
        p.add_argument("--kappa", type=_csv_list(int))
        p.add_argument("--erlangs", type=_csv_list(float))
        p.add_argument("--format", default="csv")

    p = sub.add_parser("run", help="one scenario at the first load/kappa of the config")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="full load x kappa x replication sweep")
    common(p)
    p.add_argument("--reps", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle-check", help="validate heuristics against the exact solver")
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", default="results")
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
