"""Command line interface: ``orgmod <subcommand> ...``.

Exit codes: 0 on success, 1 on input errors, 2 on numerical failures.
"""

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .annealing import AnnealConfig, anneal
from .exceptions import InputError, NumericError
from .graph import Clustering, density, induced_graph, transitivity
from .layout import fuzzy_frames, grid_layout
from .prior import custom_prior, grid_prior, identity_prior, build_grid
from .quality import count_crossings
from .sweep import SweepConfig, run_sweep

log = logging.getLogger("orgmod")

_KERNELS = {"exp": "exponential", "lin": "linear", "exponential": "exponential", "linear": "linear"}


def _grid_arg(text):
    try:
        rows, cols = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected RxC, got {text!r}") from None
    return rows, cols


def _add_format(p):
    p.add_argument("--format", choices=["edgelist", "pajek", "gml"],
                   help="graph file format (default: from the extension)")


def _build_prior(args):
    if args.similarity:
        s = io.load_matrix(args.similarity)
        if args.grid:
            pos = build_grid(*args.grid)
        else:
            side = int(round(np.sqrt(len(s))))
            if side * side != len(s):
                raise InputError("custom similarity needs --grid when its size is not a square")
            pos = build_grid(side, side)
        return custom_prior(pos, s)
    if args.grid:
        return grid_prior(args.grid[0], args.grid[1], _KERNELS[args.kernel], args.scale)
    return identity_prior(args.clusters)


def cmd_cluster(args):
    graph = io.read_graph(args.graphfile, args.format)
    prior = _build_prior(args)
    cfg = AnnealConfig(outer_steps=args.outer, start_factor=args.alpha,
                       final_temp_ratio=args.final_ratio, seed=args.seed)
    res = anneal(graph, prior, cfg)
    doc = io.result_to_dict(graph, prior, res)
    text = io.dumps_json(doc)
    if args.json:
        Path(args.json).write_text(text, encoding="utf-8")
    r = doc["result"]
    print(f"modularity {r['modularity']:.4f}  organized {r['organized_modularity']:.4f}  "
          f"clusters {prior.c} ({r['nonempty_clusters']} non-empty)  "
          f"T0 {r['critical_temperature']:.6g}  transitions {len(r['transitions'])}")
    if args.svg:
        if prior.positions is None:
            raise InputError("--svg needs a grid prior (--grid or --similarity)")
        lay = grid_layout(res.clustering, prior, induced_graph(graph, res.clustering))
        Path(args.svg).write_text(io.render_svg(lay), encoding="utf-8")
    if not args.json:
        sys.stdout.write(text)
    return 0


def _load_result(path, graph):
    doc = io.loads_json(Path(path).read_text(encoding="utf-8"))
    try:
        prior = io.prior_from_dict(doc["config"]["prior"])
        cfg = io.config_from_dict(doc["config"])
        assign = doc["result"]["assignments"]
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed result file: missing {exc}") from exc
    if len(assign) != graph.n:
        raise InputError(f"result has {len(assign)} assignments, graph has {graph.n} vertices")
    return doc, prior, cfg, Clustering(assign, prior.c)


def cmd_layout(args):
    graph = io.read_graph(args.graphfile, args.format)
    _, prior, _, cl = _load_result(args.result, graph)
    ind = induced_graph(graph, cl)
    if args.dot:
        Path(args.dot).write_text(io.render_dot(ind), encoding="utf-8")
    if prior.positions is not None:
        lay = grid_layout(cl, prior, ind)
        print(f"{len(lay.points)} clusters, {len(lay.edges)} edges, "
              f"{count_crossings(lay.points, lay.edges)} crossings")
        if args.svg:
            Path(args.svg).write_text(io.render_svg(lay), encoding="utf-8")
        if args.layout_json:
            Path(args.layout_json).write_text(io.dumps_json(io.layout_to_dict(lay)), encoding="utf-8")
    elif args.svg or args.layout_json:
        raise InputError("identity-prior results have no grid positions; use --dot")
    return 0


def cmd_animate(args):
    graph = io.read_graph(args.graphfile, args.format)
    _, prior, cfg, cl = _load_result(args.result, graph)
    if prior.positions is None:
        raise InputError("fuzzy layouts need a grid prior")
    res = anneal(graph, prior, cfg)
    if res.clustering != cl:
        log.warning("re-run does not reproduce the stored assignments")
    trail = res.trail
    if args.stride > 1:
        keep = list(trail)[:: args.stride]
        if keep[-1] is not trail[-1]:
            keep.append(trail[-1])
        from .annealing import AnnealTrail

        trail = AnnealTrail(keep)
    frames = fuzzy_frames(graph, trail, prior, cut=args.cut, fr_iterations=args.fr_iters)
    paths = io.render_frames(frames, args.out)
    print(f"wrote {len(paths)} frames to {args.out}")
    return 0


def cmd_sweep(args):
    graph = io.read_graph(args.graphfile, args.format)
    if args.config:
        cfg = SweepConfig.from_dict(io.loads_json(Path(args.config).read_text(encoding="utf-8")))
    else:
        cfg = SweepConfig()
    start = time.perf_counter()
    report = run_sweep(graph, cfg, parallel=args.parallel)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for row in report.pareto_rows:
        if row["kind"] != "organized":
            continue
        prior = grid_prior(row["rows"], row["cols"], row["kernel"], row["lambda"])
        cl = Clustering(row["assignments"], prior.c)
        name = f"pareto_{row['id']:04d}.svg"
        lay = grid_layout(cl, prior, induced_graph(graph, cl))
        (out / name).write_text(io.render_svg(lay), encoding="utf-8")
        report.artifacts.append(name)
    (out / "report.json").write_text(io.dumps_json(report.to_dict()), encoding="utf-8")
    print(f"{len(report.rows)} runs in {time.perf_counter() - start:.1f}s; Pareto points:")
    for row in report.pareto_rows:
        grid = f"{row['rows']}x{row['cols']} {row['kernel']} lambda={row['lambda']:.4g}" \
            if row["kind"] == "organized" else f"{row['kind']} C={row['n_clusters']}"
        print(f"  Q={row['modularity']:.4f}  crossings={row['crossings']}  "
              f"clusters {row['n_clusters']} ({row['nonempty_clusters']})  {grid}")
    failed = [r for r in report.rows if r["error"]]
    for r in failed:
        log.error("run %d failed: %s", r["id"], r["error"])
    return 0


def cmd_stats(args):
    graph = io.read_graph(args.graphfile, args.format)
    print(f"N {graph.n}")
    print(f"A {graph.edge_count}")
    print(f"m {graph.total_weight:g}")
    print(f"density {density(graph):.4f}")
    try:
        print(f"transitivity {transitivity(graph):.4f}")
    except InputError:
        print("transitivity undefined")
    return 0


def cmd_crossings(args):
    doc = io.loads_json(Path(args.layout).read_text(encoding="utf-8"))
    lay = io.layout_from_dict(doc)
    print(count_crossings(lay.points, lay.edges))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="orgmod", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("cluster", help="anneal one configuration")
    c.add_argument("graphfile")
    target = c.add_mutually_exclusive_group(required=True)
    target.add_argument("--grid", type=_grid_arg, metavar="RxC")
    target.add_argument("--clusters", type=int, metavar="K")
    c.add_argument("--similarity", metavar="PATH", help="custom S matrix (whitespace-separated rows)")
    c.add_argument("--kernel", choices=sorted(_KERNELS), default="exp")
    c.add_argument("--lambda", dest="scale", type=float, default=1.0)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--outer", type=int, default=None, help="number of temperatures (default N)")
    c.add_argument("--alpha", type=float, default=1.1)
    c.add_argument("--final-ratio", type=float, default=0.1)
    c.add_argument("--json", metavar="PATH")
    c.add_argument("--svg", metavar="PATH")
    _add_format(c)
    c.set_defaults(func=cmd_cluster)

    s = sub.add_parser("sweep", help="Pareto sweep over prior structures")
    s.add_argument("graphfile")
    s.add_argument("--config", metavar="PATH", help="JSON sweep configuration")
    s.add_argument("--out", default="sweep-out", metavar="DIR")
    s.add_argument("--parallel", type=int, default=1, metavar="N")
    _add_format(s)
    s.set_defaults(func=cmd_sweep)

    lo = sub.add_parser("layout", help="draw a stored result on its grid")
    lo.add_argument("result")
    lo.add_argument("graphfile")
    lo.add_argument("--svg", metavar="PATH")
    lo.add_argument("--dot", metavar="PATH")
    lo.add_argument("--layout-json", metavar="PATH")
    _add_format(lo)
    lo.set_defaults(func=cmd_layout)

    a = sub.add_parser("animate", help="fuzzy layout frames along the annealing trail")
    a.add_argument("result")
    a.add_argument("graphfile")
    a.add_argument("--cut", type=float, default=None, help="collapse distance (default 5%% of grid spacing)")
    a.add_argument("--fr-iters", type=int, default=20)
    a.add_argument("--stride", type=int, default=1, help="keep every n-th snapshot")
    a.add_argument("--out", default="frames", metavar="DIR")
    _add_format(a)
    a.set_defaults(func=cmd_animate)

    st = sub.add_parser("stats", help="N, A, m, density, transitivity")
    st.add_argument("graphfile")
    _add_format(st)
    st.set_defaults(func=cmd_stats)

    x = sub.add_parser("crossings", help="count edge crossings of a layout JSON")
    x.add_argument("layout")
    x.set_defaults(func=cmd_crossings)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
