"""Command-line entry points: discover, score, simulate, benchmark.

Exit codes: 0 success, 2 for input problems (unreadable files, schema
mismatches, graphs that fail PAG validity, bad flag values), 3 for engine
failures. Diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import os
import sys

from .citest import CIError, DataPosteriorProvider
from .data import SchemaError, format_schema, load_files, save_files
from .graphs import GraphBuilder, parse_graph, pag_validity_error
from .scoring import ScoringError, comparable_scores, straightforward_score
from .search import DcfciConfig, dcfci
from .simbench import (
    SCENARIO_DEFAULTS,
    parse_scenario,
    run_benchmark,
    simulate_replicate,
)


def _add_search_flags(sp):
    sp.add_argument("--alpha", type=float, default=0.05, help="rejection level for the plausibility gate")
    sp.add_argument("--k", type=int, default=1, help="candidates retained per iteration")
    sp.add_argument("--rmax", type=int, default=None, help="largest separator size (default: p-2)")
    sp.add_argument("--ties", choices=("strict", "equal-upper", "overlap"), default="strict")
    sp.add_argument("--sep-base", choices=("pds", "adjacency"), default="pds", dest="sep_base")
    sp.add_argument("--threads", type=int, default=1)


def _load_dataset(args):
    return load_files(args.data, args.schema)


def _read_graph(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        g = parse_graph(fh.read())
    problem = pag_validity_error(g)
    if problem is not None:
        raise SchemaError("%s is not a valid PAG: %s" % (path, problem))
    return g


def _cmd_discover(args) -> int:
    d = _load_dataset(args)
    cfg = DcfciConfig(
        alpha=args.alpha,
        k=args.k,
        r_max=args.rmax,
        ties=args.ties,
        sep_base=args.sep_base,
        threads=args.threads,
    )
    candidates, trace = dcfci(d, cfg)
    os.makedirs(args.out, exist_ok=True)
    for rank, cand in enumerate(candidates, start=1):
        path = os.path.join(args.out, "pag_%02d.txt" % rank)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(cand.graph.serialize())
    with open(os.path.join(args.out, "scores.txt"), "w", encoding="utf-8") as fh:
        for cand in candidates:
            fh.write(
                "%s %.3f %.3f %d\n"
                % (cand.graph.digest(), cand.score.lower, cand.score.upper, cand.n_contested)
            )
    with open(os.path.join(args.out, "manifest.txt"), "w", encoding="utf-8") as fh:
        fh.write(trace.render())
    for rank, cand in enumerate(candidates, start=1):
        print(
            "pag_%02d.txt %s %.3f %.3f"
            % (rank, cand.graph.digest(), cand.score.lower, cand.score.upper)
        )
    return 0


def _cmd_score(args) -> int:
    main_graph = _read_graph(args.graph)
    d = _load_dataset(args)
    if sorted(main_graph.names) != sorted(d.names):
        raise SchemaError("graph variables do not match the dataset schema")
    provider = DataPosteriorProvider(d)
    aligned = _align(main_graph, d.names)
    r_max = args.rmax if args.rmax is not None else d.p - 2
    if not args.against:
        bounds = straightforward_score(aligned, provider, r_max)
        print("%.3f %.3f" % (bounds.lower, bounds.upper))
        return 0
    graphs = [(args.graph, aligned)]
    for path in args.against:
        graphs.append((path, _align(_read_graph(path), d.names)))
    scored = comparable_scores([(g, None) for _, g in graphs], provider, r_max)
    for (path, _), (bounds, _n) in zip(graphs, scored):
        print("%.3f %.3f %s" % (bounds.lower, bounds.upper, path))
    return 0


def _align(g, names):
    if tuple(g.names) == tuple(names):
        return g
    idx = {nm: i for i, nm in enumerate(names)}
    b = GraphBuilder(names)
    for i, j in g.edge_pairs():
        b.add_edge(idx[g.names[i]], idx[g.names[j]], g.mark(j, i), g.mark(i, j))
    return b.freeze()


def _scenario_from_args(args) -> dict:
    scenario = dict(SCENARIO_DEFAULTS)
    if getattr(args, "scenario", None):
        with open(args.scenario, "r", encoding="utf-8") as fh:
            scenario = parse_scenario(fh.read())
    for key in ("p", "n", "seed", "threads"):
        value = getattr(args, key, None)
        if value is not None:
            scenario[key] = value
    if getattr(args, "edge_density", None) is not None:
        scenario["edge_density"] = args.edge_density
    if getattr(args, "bidirected_fraction", None) is not None:
        scenario["bidirected_fraction"] = args.bidirected_fraction
    if getattr(args, "kinds", None) is not None:
        scenario["kinds"] = args.kinds
    return scenario


def _cmd_simulate(args) -> int:
    scenario = _scenario_from_args(args)
    gt, d = simulate_replicate(scenario, 0)
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "data.csv")
    schema_path = os.path.join(args.out, "schema.txt")
    save_files(d, csv_path, schema_path)
    for stem, graph in (("truth_admg", gt.admg), ("truth_mag", gt.mag), ("truth_pag", gt.pag)):
        with open(os.path.join(args.out, stem + ".txt"), "w", encoding="utf-8") as fh:
            fh.write(graph.serialize())
    print("wrote %s and %s plus truth graphs to %s" % (csv_path, schema_path, args.out))
    return 0


def _cmd_benchmark(args) -> int:
    scenario = _scenario_from_args(args)
    result = run_benchmark(scenario)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "results.csv"), "w", encoding="utf-8") as fh:
        fh.write(result.csv_text())
    summary = result.summary_text()
    with open(os.path.join(args.out, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(summary)
    sys.stdout.write(summary)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dcfci", description="Data-compatibility-scored causal discovery")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("discover", help="learn ranked PAGs from a dataset")
    sp.add_argument("--data", required=True, help="CSV file with a header row")
    sp.add_argument("--schema", required=True, help="name=kind schema file")
    _add_search_flags(sp)
    sp.add_argument("--out", default="dcfci_out", help="output directory")
    sp.set_defaults(func=_cmd_discover)

    sp = sub.add_parser("score", help="score a PAG against a dataset")
    sp.add_argument("--graph", required=True, help="graph text file")
    sp.add_argument("--data", required=True)
    sp.add_argument("--schema", required=True)
    sp.add_argument("--rmax", type=int, default=None)
    sp.add_argument("--against", nargs="+", default=None, help="score jointly against these graphs")
    sp.set_defaults(func=_cmd_score)

    sp = sub.add_parser("simulate", help="write one synthetic dataset with its ground truth")
    sp.add_argument("--scenario", default=None, help="key=value scenario file")
    sp.add_argument("--p", type=int, default=None)
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--edge-density", type=float, default=None, dest="edge_density")
    sp.add_argument("--bidirected-fraction", type=float, default=None, dest="bidirected_fraction")
    sp.add_argument("--kinds", default=None, help="gaussian or comma-separated kind tokens")
    sp.add_argument("--out", default="dcfci_sim")
    sp.set_defaults(func=_cmd_simulate)

    sp = sub.add_parser("benchmark", help="run a benchmark scenario")
    sp.add_argument("--scenario", default=None, help="key=value scenario file")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--threads", type=int, default=None)
    sp.add_argument("--out", default="dcfci_bench")
    sp.set_defaults(func=_cmd_benchmark)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as err:  # includes schema and graph format errors
        print("error: %s" % err, file=sys.stderr)
        return 2
    except (ScoringError, CIError) as err:
        print("engine error: %s" % err, file=sys.stderr)
        return 3
    except Exception as err:
        print("engine error: %s" % err, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
