"""Command-line entry points: ``prefopt bench`` and ``prefopt serve``.

Bench flags mirror a JSON config file (``--config``); explicit flags win.
Exit code 0 on success, 1 when more than 20% of Monte Carlo runs fail.
"""

from __future__ import annotations

import argparse
import json
import sys

from .bench import (BenchConfig, export_response_comparison, export_results,
                    run_montecarlo)
from .errors import PrefoptError
from .oracles import SuspensionProblem


def _bench_parser(sub):
    p = sub.add_parser("bench", help="run a Monte Carlo benchmark study")
    p.add_argument("--problem", choices=("analytical", "susp2d", "susp4d"))
    p.add_argument("--runs", type=int)
    p.add_argument("--budget", type=int)
    p.add_argument("--seed-base", type=int, dest="seed_base")
    p.add_argument("--arms", type=str, help="comma list: baseline,regularized")
    p.add_argument("--ref", choices=("grid", "swarm"), dest="ref_method")
    p.add_argument("--out", type=str, dest="out_dir")
    p.add_argument("--n-init", type=int, dest="n_init")
    p.add_argument("--config", type=str, help="JSON file mirroring the flags")
    return p


def _serve_parser(sub):
    p = sub.add_parser("serve", help="run the live preference session service")
    p.add_argument("--port", type=int, default=8714)
    p.add_argument("--store", type=str, default=None,
                   help="append-only event log path (sessions survive restarts)")
    p.add_argument("--ui-dir", type=str, default=None,
                   help="directory of built frontend assets to serve at /")
    return p


def _bench_config(args) -> BenchConfig:
    doc = {}
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
    for key in ("problem", "runs", "budget", "seed_base", "ref_method",
                "out_dir", "n_init"):
        val = getattr(args, key, None)
        if val is not None:
            doc[key] = val
    if args.arms is not None:
        doc["arms"] = tuple(a.strip() for a in args.arms.split(",") if a.strip())
    elif "arms" in doc:
        doc["arms"] = tuple(doc["arms"])
    if "seeds" in doc:
        doc["seeds"] = tuple(doc["seeds"])
    if "problem" not in doc:
        raise SystemExit("bench: --problem is required (flag or config file)")
    return BenchConfig(**doc)


def cmd_bench(args) -> int:
    cfg = _bench_config(args)
    table = run_montecarlo(cfg)
    table.validate()
    paths = export_results(table, cfg)
    problem = cfg.make_problem()
    if (isinstance(problem, SuspensionProblem)
            and {"baseline", "regularized"} <= set(cfg.arms)):
        paths += export_response_comparison(
            problem, table.final_x["baseline"], table.final_x["regularized"],
            cfg.out_dir)
    for arm in cfg.arms:
        print(f"{cfg.problem} {arm}: final error "
              f"{table.mean(arm)[-1]:.6g} +/- {table.std(arm)[-1]:.6g}")
    for path in paths:
        print(f"wrote {path}")
    if table.failures:
        for seed, msg in table.failures:
            print(f"run {seed} failed: {msg}", file=sys.stderr)
        if table.failure_fraction > 0.20:
            print(f"{len(table.failures)} runs failed "
                  f"({table.failure_fraction:.0%} > 20%)", file=sys.stderr)
            return 1
    return 0


def cmd_serve(args) -> int:
    from .session import serve

    server = serve(port=args.port, store_path=args.store, ui_dir=args.ui_dir)
    host, port = server.server_address[:2]
    print(f"session service listening on http://{host}:{port}/")
    if args.store:
        print(f"event log: {args.store}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="prefopt",
        description="preference-based global optimization: benchmarks and "
                    "live tuning sessions")
    sub = parser.add_subparsers(dest="command", required=True)
    _bench_parser(sub)
    _serve_parser(sub)
    args = parser.parse_args(argv)
    try:
        if args.command == "bench":
            return cmd_bench(args)
        return cmd_serve(args)
    except PrefoptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
