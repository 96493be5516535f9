"""Command line: ``bulktri {count,bench,gen,exact}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from bulktri import generate
from bulktri.edgeio import EdgeListParseError, read_edge_list, write_edge_list
from bulktri.oracle import OrderedGraph
from bulktri.runner import DEFAULT_BATCH_SIZE, DEFAULT_ESTIMATORS, RunConfig, run_benchmark, run_count


def _int_list(text: str) -> list[int]:
    try:
        return [int(float(x)) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", help="edge list: one 'u v' pair per line, '#' comments")
    p.add_argument("-r", "--estimators", type=lambda x: int(float(x)), default=DEFAULT_ESTIMATORS,
                   help=f"number of estimators (default {DEFAULT_ESTIMATORS})")
    p.add_argument("-s", "--batch-size", type=lambda x: int(float(x)), default=DEFAULT_BATCH_SIZE,
                   help=f"edges per batch (default {DEFAULT_BATCH_SIZE})")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-w", "--workers", type=int, default=None, help="worker threads (default: all CPUs)")
    p.add_argument("--groups", type=int, default=None,
                   help="median-of-means groups (default min(r, ceil(8 ln(1/delta))))")
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--epsilon", type=float, default=None,
                   help="size r for this relative error (needs --tau-lower-bound)")
    p.add_argument("--tau-lower-bound", type=float, default=None,
                   help="guess of a lower bound on the triangle count, for sizing r")
    p.add_argument("--max-edges", type=int, default=None, help="only read this many edges")
    p.add_argument("--format", choices=("text", "json"), default="text")


def _config(args, **extra) -> RunConfig:
    return RunConfig(input_path=args.input, estimators=args.estimators, batch_size=args.batch_size,
                     seed=args.seed, workers=args.workers, epsilon=args.epsilon, delta=args.delta,
                     tau_lower_bound=args.tau_lower_bound, groups=args.groups,
                     max_edges=args.max_edges, output_format=args.format, **extra)


def cmd_count(args) -> int:
    cfg = _config(args, trials=args.trials, exact_check=args.exact)
    report = run_count(cfg)
    if cfg.output_format == "json":
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(report.to_text())
    return 0 if report.ok else 1


def cmd_bench(args) -> int:
    cfg = _config(args)
    values = args.values or ([1, 2, 4, cfg.worker_count] if args.sweep == "workers"
                             else [1000, 10_000, 100_000, 1_000_000])
    if args.sweep == "workers":
        values = sorted(set(values))
    rows = run_benchmark(cfg, args.sweep, values)
    if cfg.output_format == "json":
        print(json.dumps({"sweep": args.sweep, "estimators": cfg.estimators,
                          "rows": [vars(r) for r in rows]}, indent=2))
    else:
        print(f"{args.sweep:>10s} {'edges':>12s} {'time[s]':>10s} {'edges/s':>12s} {'speedup':>8s}")
        for r in rows:
            print(f"{r.value:>10d} {r.m_seen:>12d} {r.processing_time:>10.3f} "
                  f"{r.throughput:>12.4g} {r.speedup:>8.2f}")
    return 0


def cmd_gen(args) -> int:
    if args.kind == "gnp":
        if args.p is None:
            raise SystemExit("gen gnp needs --p")
        edges = generate.gnp(args.n, args.p, seed=args.seed)
        header = f"gnp n={args.n} p={args.p} seed={args.seed}"
    else:
        edges = generate.powerlaw(args.n, args.exponent, args.min_degree, args.max_degree, seed=args.seed)
        header = (f"powerlaw n={args.n} exponent={args.exponent} min_degree={args.min_degree} "
                  f"max_degree={args.max_degree} seed={args.seed}")
    write_edge_list(args.output, edges, header=f"{header}\nedges={len(edges)}")
    print(f"wrote {len(edges)} edges to {args.output}", file=sys.stderr)
    return 0


def cmd_exact(args) -> int:
    edges = read_edge_list(args.input, args.max_edges)
    g = OrderedGraph(edges.tolist())
    tau = g.triangle_count()
    if args.format == "json":
        print(json.dumps({"triangles": tau, "edges": g.m, "max_degree": g.max_degree()}))
    else:
        print(tau)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bulktri", description="Streaming approximate triangle counting.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", help="estimate the triangle count of an edge stream")
    _add_run_args(p)
    p.add_argument("-t", "--trials", type=int, default=1)
    p.add_argument("--exact", action="store_true", help="also compute the exact count and mean deviation")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("bench", help="throughput sweep over batch sizes or worker counts")
    _add_run_args(p)
    p.add_argument("--sweep", choices=("batch", "workers"), default="batch")
    p.add_argument("--values", type=_int_list, default=None,
                   help="comma-separated sweep points (default 1e3,1e4,1e5,1e6 or 1,2,4,all)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen", help="write a synthetic edge list")
    p.add_argument("kind", choices=("gnp", "powerlaw"))
    p.add_argument("output")
    p.add_argument("-n", type=int, required=True, help="number of vertices")
    p.add_argument("--p", type=float, default=None, help="edge probability (gnp)")
    p.add_argument("--exponent", type=float, default=2.5, help="degree exponent (powerlaw)")
    p.add_argument("--min-degree", type=int, default=1)
    p.add_argument("--max-degree", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("exact", help="exact triangle count (in-memory, desk scale)")
    p.add_argument("input")
    p.add_argument("--max-edges", type=int, default=None)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_exact)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (EdgeListParseError, FileNotFoundError, ValueError) as exc:
        print(f"bulktri: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
