"""Command line entry point: generate, cluster, stream, sweep, inspect."""
import argparse
import json
import sys

import yaml

from . import rng as _rng
from .assign import classify_all
from .baseline import BlockPowerConfig, block_power_stream
from .experiments import ExperimentSpec, parse_f, run_sweep, write_rows
from .metrics import misclassification
from .sbm import GraphFormatError, ParameterError, SbmGraph, SbmParams, generate, open_stream, restrict_to_green
from .spectral import classify_green
from .streaming import ConfigError, StreamConfig, offline_stream, online_stream

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _green_set(n, gamma, seed, K):
    m = min(n, max(K, int(round(gamma * n))))
    return _rng.generator(seed, _rng.ALGORITHM).choice(n, size=m, replace=False)


def _p_of(graph, args):
    if args.p is not None:
        return args.p
    return max(graph.degrees().mean() / graph.n, 1.0 / graph.n)


def cmd_generate(args):
    fractions = [float(x) for x in args.fractions.split(",")] if args.fractions else None
    params = SbmParams(n=args.n, K=args.K, a=args.a, b=args.b, f_n=parse_f(args.f)(args.n),
                       cluster_fractions=fractions)
    _, g = generate(params, args.seed)
    if args.out in (None, "-"):
        sys.stdout.write(g.dumps())
    else:
        g.save(args.out)
    print(f"n={g.n} K={g.K} edges={g.num_edges} p={params.p:.6g} q={params.q:.6g}", file=sys.stderr)


def _report(truth, est):
    rep = misclassification(truth, est)
    print(f"epsilon={rep.epsilon:.6f} domain={rep.domain_size}", file=sys.stderr)


def cmd_cluster(args):
    g = SbmGraph.load(args.graph)
    view = restrict_to_green(g, _green_set(g.n, args.gamma, args.seed, g.K))
    est = classify_all(view, g.K, seed=args.seed)
    est.to_csv(args.out) if args.out not in (None, "-") else _dump_labels(est)
    _report(g.labels, est)


def _dump_labels(est):
    from .labels import PROVENANCE_NAMES
    sys.stdout.write("node_id,label,provenance\n")
    for v, l, p in zip(est.nodes, est.labels, est.provenance):
        sys.stdout.write(f"{v},{l},{PROVENANCE_NAMES[p]}\n")


def cmd_stream(args):
    g = SbmGraph.load(args.graph)
    T = args.T if args.T is not None else g.n
    stream = open_stream(g, args.seed)
    p = _p_of(g, args)
    if args.mode == "blockpower":
        res = block_power_stream(stream, BlockPowerConfig(g.n, p, args.g, T), g.K, seed=args.seed)
        est = res.assignment
    elif args.mode == "offline":
        res = offline_stream(stream, StreamConfig(g.n, args.h, T=T, p=p), g.K, seed=args.seed)
        est = res.assignment
    else:
        res = online_stream(stream, StreamConfig(g.n, args.h, T=T, p=p), g.K, seed=args.seed)
        if args.out not in (None, "-"):
            res.to_csv(args.out)
        else:
            sys.stdout.write("block_index,node_id,label\n")
            for e in res.emissions:
                for v, l in zip(e.nodes, e.labels):
                    sys.stdout.write(f"{e.block_index},{v},{l}\n")
        _report(g.labels, res.assignment(g.K))
        print(f"block_size={res.block_size} blocks={res.blocks} peak_bits={res.peak_bits}", file=sys.stderr)
        return
    est.to_csv(args.out) if args.out not in (None, "-") else _dump_labels(est)
    _report(g.labels, est)
    print(f"block_size={res.block_size} blocks={res.blocks} peak_bits={res.peak_bits}", file=sys.stderr)


def cmd_sweep(args):
    spec = ExperimentSpec.load(args.spec)
    if args.seed is not None:
        spec.seeds = [args.seed]
    rows = run_sweep(spec, jobs=args.jobs)
    write_rows(rows, args.out or spec.output, args.format)


def cmd_inspect(args):
    g = SbmGraph.load(args.graph)
    view = restrict_to_green(g, _green_set(g.n, args.gamma, args.seed, g.K))
    res = classify_green(view, g.K, seed=args.seed)
    d = dict(res.diagnostics)
    d["epsilon_green"] = misclassification(g.labels, res).epsilon
    if args.format == "json":
        print(json.dumps(d, indent=1, default=float))
    else:
        print("key,value")
        for k, v in d.items():
            print(f"{k},{v}")


def build_parser():
    ap = _Parser(prog="streamsbm", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="sample an SBM graph file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--K", type=int, default=2)
    p.add_argument("--a", type=float, default=8.0)
    p.add_argument("--b", type=float, default=2.0)
    p.add_argument("--f", default="ln n", help="f(n): number or e.g. 'n^0.45', 'ln^2 n'")
    p.add_argument("--fractions", help="comma-separated cluster fractions")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("cluster", help="partial-information clustering of a graph file")
    p.add_argument("--graph", required=True)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--mode", choices=["partial"], default="partial")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("stream", help="run a streaming engine on a graph file")
    p.add_argument("--graph", required=True)
    p.add_argument("--mode", choices=["offline", "online", "blockpower"], default="offline")
    p.add_argument("--h", type=float, default=1.0, help="memory scale h(n)")
    p.add_argument("--g", type=float, default=1.0, help="block-power scale g(n)")
    p.add_argument("--T", type=int)
    p.add_argument("--p", type=float, help="intra-cluster edge probability (default: plug-in)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_stream)

    p = sub.add_parser("sweep", help="run an experiment grid from a YAML spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("inspect", help="print matrix-selection diagnostics")
    p.add_argument("--graph", required=True)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_inspect)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (GraphFormatError, ParameterError, ConfigError, ValueError, OSError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
