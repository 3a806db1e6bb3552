"""Command-line interface: bench, footprint, dominators, selftest.

Sizes are given as exponent ranges (``--sizes 6..16`` means 2^6..2^16,
comma lists also work), mixes as ``--mix 50:50``.  ``--output -``
writes to stdout.  Exit status: 0 on success, 1 when a correctness
gate or self-check fails, 2 on configuration or input errors.
"""

import argparse
import sys
from datetime import datetime, timezone
from pathlib import Path

from .bench import (
    BenchConfig,
    ConfigurationError,
    GateError,
    WorkloadSpec,
    run_benchmarks,
    run_footprint,
    write_bench_csv,
    write_bench_json,
    write_footprint_csv,
    write_footprint_json,
)
from .dominators import (
    GraphError,
    analyze_graph,
    parse_edge_list,
    random_cfg,
    write_dominator_csv,
    write_dominator_json,
)
from .selftest import run_selftest


def _parse_sizes(text):
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            lo, hi = int(lo), int(hi)
            if lo > hi:
                raise ValueError(f"empty size range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    if not out:
        raise ValueError("no sizes given")
    return tuple(out)


def _parse_mix(text):
    left, sep, right = text.partition(":")
    if not sep:
        raise ValueError(f"mix must look like 50:50, got {text!r}")
    ones, twos = int(left), int(right)
    if ones < 0 or twos < 0 or ones + twos == 0:
        raise ValueError("mix parts must be non-negative and not both zero")
    return ones / (ones + twos)


def _parse_int_list(text):
    return tuple(int(part) for part in text.split(","))


def _add_report_flags(parser):
    parser.add_argument(
        "--format", choices=("csv", "json"), default="csv", help="report format"
    )
    parser.add_argument(
        "--output", default="-", metavar="PATH", help="report path; - for stdout"
    )
    parser.add_argument(
        "--timestamp",
        default=None,
        metavar="ISO8601",
        help="timestamp for the JSON metadata header (default: now; "
        "set explicitly for reproducible output)",
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="leantrie",
        description="Benchmarks, footprint comparisons, and the dominator "
        "case study for the persistent multimap.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="time the operation suites")
    bench.add_argument(
        "--sizes", type=_parse_sizes, default=tuple(range(6, 17)),
        metavar="A..B", help="size exponents (default 6..16)",
    )
    bench.add_argument("--seeds", type=int, default=5, help="seeds per size (default 5)")
    bench.add_argument(
        "--mix", type=_parse_mix, default=1.0, metavar="ONE:TWO",
        help="share of 1:1 vs 1:2 keys (default 100:0, a pure 1:1 grid "
        "on which the plain-map baseline can join the comparison)",
    )
    bench.add_argument(
        "--structures", default=None, metavar="NAMES",
        help="comma list among multimap,map_of_sets,map "
        "(default: all that fit the mix)",
    )
    bench.add_argument("--burst", type=int, default=8, help="probes per burst (default 8)")
    bench.add_argument("--warmup", type=int, default=10, help="warmup iterations")
    bench.add_argument("--measured", type=int, default=20, help="measured iterations")
    _add_report_flags(bench)

    fp = sub.add_parser("footprint", help="modeled-word footprint comparison")
    fp.add_argument(
        "--sizes", type=_parse_sizes, default=tuple(range(6, 17)),
        metavar="A..B", help="size exponents (default 6..16)",
    )
    fp.add_argument(
        "--mix", type=_parse_mix, default=0.5, metavar="ONE:TWO",
        help="share of 1:1 vs 1:2 keys (default 50:50)",
    )
    fp.add_argument("--seed", type=int, default=0, help="dataset seed (default 0)")
    _add_report_flags(fp)

    dom = sub.add_parser("dominators", help="dominator analysis over CFGs")
    dom.add_argument(
        "--graph", action="append", default=[], metavar="FILE",
        help="edge-list file (repeatable)",
    )
    dom.add_argument(
        "--graph-dir", action="append", default=[], metavar="DIR",
        help="directory of edge-list files (repeatable)",
    )
    dom.add_argument(
        "--random", type=_parse_int_list, default=None, metavar="SIZES",
        help="generate random CFGs of these vertex counts "
        "(default 128,256,512 when no files are given)",
    )
    dom.add_argument(
        "--graphs-per-size", type=int, default=100,
        help="random graphs per size (default 100)",
    )
    dom.add_argument("--seed", type=int, default=0, help="generator seed base")
    _add_report_flags(dom)

    sub.add_parser("selftest", help="run the quick invariant and oracle checks")
    return parser


def _write_report(args, rows, csv_writer, json_writer, config_info):
    timestamp = args.timestamp or datetime.now(timezone.utc).isoformat()
    if args.output == "-":
        _emit(sys.stdout, args.format, rows, csv_writer, json_writer, timestamp, config_info)
    else:
        with open(args.output, "w", encoding="utf-8", newline="") as stream:
            _emit(stream, args.format, rows, csv_writer, json_writer, timestamp, config_info)


def _emit(stream, fmt, rows, csv_writer, json_writer, timestamp, config_info):
    if fmt == "csv":
        csv_writer(rows, stream)
    else:
        json_writer(rows, stream, timestamp, config_info)


def _cmd_bench(args):
    spec = WorkloadSpec(
        size_exponents=args.sizes, seeds=args.seeds, mix=args.mix, burst_size=args.burst
    )
    config = BenchConfig(warmup_iterations=args.warmup, measured_iterations=args.measured)
    structures = args.structures.split(",") if args.structures else None
    rows = run_benchmarks(spec, config, structures)
    info = {
        "sizes": list(args.sizes),
        "seeds": args.seeds,
        "mix": args.mix,
        "burst": args.burst,
        "warmup": args.warmup,
        "measured": args.measured,
        "structures": structures or "auto",
    }
    _write_report(args, rows, write_bench_csv, write_bench_json, info)
    return 0


def _cmd_footprint(args):
    rows = run_footprint(args.sizes, mix=args.mix, seed=args.seed)
    info = {"sizes": list(args.sizes), "mix": args.mix, "seed": args.seed}
    _write_report(args, rows, write_footprint_csv, write_footprint_json, info)
    return 0


def _load_graphs(args):
    graphs = []
    paths = [Path(p) for p in args.graph]
    for directory in args.graph_dir:
        root = Path(directory)
        if not root.is_dir():
            raise GraphError(f"not a directory: {directory}")
        paths.extend(sorted(p for p in root.iterdir() if p.is_file()))
    for path in paths:
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise GraphError(f"cannot read graph file {path}: {exc}") from exc
        graphs.append(parse_edge_list(text, name=path.name))
    random_sizes = args.random
    if random_sizes is None and not graphs:
        random_sizes = (128, 256, 512)
    if random_sizes:
        for size in random_sizes:
            for i in range(args.graphs_per_size):
                graphs.append(random_cfg(size, args.seed + i))
    return graphs


def _cmd_dominators(args):
    graphs = _load_graphs(args)
    if not graphs:
        raise ConfigurationError("no graphs to analyze")
    results = [analyze_graph(g) for g in graphs]
    info = {
        "graphs": len(graphs),
        "seed": args.seed,
        "graphs_per_size": args.graphs_per_size,
    }
    _write_report(args, results, write_dominator_csv, write_dominator_json, info)
    return 0


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        if args.command == "bench":
            return _cmd_bench(args)
        if args.command == "footprint":
            return _cmd_footprint(args)
        if args.command == "dominators":
            return _cmd_dominators(args)
        return 0 if run_selftest() else 1
    except GateError as exc:
        print(f"leantrie: correctness gate failed: {exc}", file=sys.stderr)
        return 1
    except (ConfigurationError, GraphError) as exc:
        print(f"leantrie: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"leantrie: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
