"""Command-line interface.

Subcommands: align, evaluate, perturb, heatmap, sweep.  Exit codes:
0 success, 1 usage error, 2 unreadable or malformed input, 3 alignment
abort (a partial mapping is still written when possible).  Tunables
resolve as CLI flag over config-file entry over built-in default, and
every run logs the effective configuration.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__
from .graph import (GraphError, load_graph, save_graph, load_anchor_map,
                    load_ground_truth, load_external_similarity,
                    load_token_weights)
from .aligner import AlignConfig, AlignmentAbort, align
from .anchors import (DistanceTable, bootstrap_anchors, find_central_anchors,
                      find_vantage_anchors, pair_and_order)
from .embedding import compute_all_positions, normalize_coords, density_grid, \
    write_density_csv
from .similarity import SimilarityConfig
from . import bench

log = logging.getLogger("galign")

# CLI flag destination -> AlignConfig field
_FLAG_FIELDS = {
    "bucket_size": "bucket_capacity",
    "topk": "top_k",
    "iterations": "max_iterations",
    "growth_ratio": "min_growth_ratio",
    "anchor_cap": "anchor_cap",
    "central_threshold": "central_hop_threshold",
    "close_epsilon": "close_epsilon",
    "seed": "seed",
    "threads": "threads",
}


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write("%s: error: %s\n" % (self.prog, message))
        raise SystemExit(1)


def _common_flags(p):
    p.add_argument("--config", help="key = value file with tunables")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--log-level", default="info",
                   choices=["debug", "info", "warning", "error"])
    p.add_argument("--bucket-size", dest="bucket_size", type=int, default=None)
    p.add_argument("--no-neighbors", dest="no_neighbors",
                   action="store_const", const=True, default=None,
                   help="score only within each bucket, skipping neighbor buckets")
    p.add_argument("--topk", type=int, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--growth-ratio", dest="growth_ratio", type=float, default=None)
    p.add_argument("--anchor-cap", dest="anchor_cap", type=int, default=None)
    p.add_argument("--central-threshold", dest="central_threshold",
                   type=float, default=None)
    p.add_argument("--close-epsilon", dest="close_epsilon", type=float, default=None)


_BOOL_WORDS = {"true": True, "1": True, "yes": True, "on": True,
               "false": False, "0": False, "no": False, "off": False}


def parse_config_file(path) -> dict:
    """Read `key = value` lines into AlignConfig field overrides."""
    defaults = AlignConfig()
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise GraphError("config line %d: expected key = value" % lineno)
            key, _, raw = line.partition("=")
            key = key.strip()
            raw = raw.strip()
            if not hasattr(defaults, key):
                raise GraphError("config line %d: unknown key %r" % (lineno, key))
            cur = getattr(defaults, key)
            try:
                if isinstance(cur, bool):
                    out[key] = _BOOL_WORDS[raw.lower()]
                elif isinstance(cur, int):
                    out[key] = int(raw)
                else:
                    out[key] = float(raw)
            except (KeyError, ValueError):
                raise GraphError("config line %d: bad value %r for %s"
                                 % (lineno, raw, key)) from None
    return out


def build_config(args) -> AlignConfig:
    cfg = AlignConfig()
    if getattr(args, "config", None):
        for key, val in parse_config_file(args.config).items():
            setattr(cfg, key, val)
    for dest, field in _FLAG_FIELDS.items():
        val = getattr(args, dest, None)
        if val is not None:
            setattr(cfg, field, val)
    if getattr(args, "no_neighbors", None):
        cfg.scan_neighbors = False
    return cfg


def _load_graph_arg(arg):
    """Parse --g1/--g2 values: 'vertices.tsv,edges.tsv' or 'edges.tsv'."""
    parts = arg.split(",")
    if len(parts) == 1:
        return load_graph(parts[0]), {"edges": parts[0]}
    if len(parts) == 2:
        return load_graph(parts[1], parts[0]), {"vertices": parts[0], "edges": parts[1]}
    raise GraphError("graph argument must be EDGES or VERTICES,EDGES: %r" % arg)


def _echo_config(cfg: AlignConfig):
    items = ["%s=%s" % (k, v) for k, v in sorted(cfg.__dict__.items())]
    log.info("effective config: %s", " ".join(items))


def _write_mapping(path, result, g1, g2):
    with open(path, "w", encoding="utf-8") as fh:
        for u in sorted(result.mapping):
            v = result.mapping[u]
            fh.write("%s\t%s\t%s\t%d\n" % (g1.ext_ids[u], g2.ext_ids[v],
                                           repr(result.scores[u]),
                                           result.found_iteration[u]))


def _write_report(path, report, inputs):
    doc = dict(report)
    doc["inputs"] = inputs
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def cmd_align(args) -> int:
    cfg = build_config(args)
    cfg.validate()
    _echo_config(cfg)
    g1, in1 = _load_graph_arg(args.g1)
    g2, in2 = _load_graph_arg(args.g2)
    anchors = load_anchor_map(args.anchors, g1, g2) if args.anchors else None
    truth = load_ground_truth(args.truth, g1, g2) if args.truth else None
    table = load_external_similarity(args.h_table, g1, g2) if args.h_table else None
    weights = load_token_weights(args.weights) if args.weights else None
    inputs = {"g1": in1, "g2": in2, "anchors": args.anchors or "(bootstrap)"}
    report_path = args.report or (args.out + ".report.json")
    try:
        result = align(g1, g2, anchors=anchors, config=cfg, truth=truth,
                       external_table=table, token_weights=weights)
    except AlignmentAbort as exc:
        log.error("alignment aborted: %s", exc)
        if exc.partial is not None:
            _write_mapping(args.out, exc.partial, g1, g2)
            _write_report(report_path, exc.partial.report, inputs)
        return 3
    _write_mapping(args.out, result, g1, g2)
    _write_report(report_path, result.report, inputs)
    totals = result.report["totals"]
    log.info("mapped %d pairs in %d iterations, gain %.6f",
             totals["mapped"], totals["iterations"], totals["gain"])
    return 0


def _read_pair_file(path):
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) < 2:
                raise GraphError("line %d: expected two tab-separated ids" % lineno)
            pairs.append((fields[0], fields[1]))
    return pairs


def cmd_evaluate(args) -> int:
    mapping = dict(_read_pair_file(args.mapping))
    truth = _read_pair_file(args.truth)
    if not truth:
        raise GraphError("ground truth file %s is empty" % args.truth)
    correct = sum(1 for u, v in truth if mapping.get(u) == v)
    lines = ["truth_pairs=%d" % len(truth),
             "mapped_pairs=%d" % len(mapping),
             "correct=%d" % correct,
             "recall=%.6f" % (correct / len(truth))]
    if args.report:
        with open(args.report, encoding="utf-8") as fh:
            totals = json.load(fh).get("totals", {})
        if "hit_count" in totals:
            lines.append("hit_count=%.6f" % totals["hit_count"])
        if "gain" in totals:
            lines.append("gain=%.6f" % totals["gain"])
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return 0


def cmd_perturb(args) -> int:
    cfg = build_config(args)
    seed = cfg.seed
    g, _ = _load_graph_arg(args.g1)
    res = bench.perturb(g, seed=seed, remove_edges=args.remove_edges,
                        add_vertices=args.add_vertices, add_edges=args.add_edges)
    out_graph = res.graph
    if args.rewrite_tokens > 0:
        out_graph = bench.perturb_vertex_tokens(out_graph, args.rewrite_tokens, seed)
    save_graph(out_graph, args.out_edges, args.out_vertices)
    if args.out_truth:
        with open(args.out_truth, "w", encoding="utf-8") as fh:
            for u, v in res.truth.pairs:
                fh.write("%s\t%s\n" % (g.ext_ids[u], out_graph.ext_ids[v]))
    log.info("perturbed graph: %d vertices, %d edges", out_graph.n, out_graph.m)
    return 0


def cmd_heatmap(args) -> int:
    cfg = build_config(args)
    _echo_config(cfg)
    g1, _ = _load_graph_arg(args.g1)
    g2, _ = _load_graph_arg(args.g2)
    sim_cfg = SimilarityConfig.detect(g1, g2, close_epsilon=cfg.close_epsilon)
    if args.anchors:
        anchors = load_anchor_map(args.anchors, g1, g2)
    else:
        anchors = bootstrap_anchors(g1, g2, sim_cfg, cfg.bootstrap_log_base)
    dtable = DistanceTable(g1, g2)
    dtable.ensure_rows(anchors.pairs, cfg.threads)
    lefts = sorted(u for u, _ in anchors.pairs)
    centrals = find_central_anchors(g1, lefts, dtable, cfg.central_hop_threshold)
    non_central = [u for u in lefts if u not in set(centrals)]
    vantage = find_vantage_anchors(non_central, centrals, dtable)
    try:
        vpairs = pair_and_order(vantage, dtable)
    except GraphError as exc:
        log.error("cannot build vantage pairs: %s", exc)
        return 3
    left_of = dict(anchors.pairs)
    rows1, seps1, rows2, seps2 = [], [], [], []
    for p0, p1 in vpairs:
        rows1.append((dtable.row(1, p0), dtable.row(1, p1)))
        d = dtable.row(1, p0)[p1]
        seps1.append(float(d) if d >= 0 else float("inf"))
        rows2.append((dtable.row(2, p0), dtable.row(2, p1)))
        d2 = dtable.row(2, p0)[left_of[p1]]
        seps2.append(float(d2) if d2 >= 0 else float("inf"))
    coords1, cnt1 = compute_all_positions(g1.n, vpairs, rows1, seps1)
    coords2, cnt2 = compute_all_positions(g2.n, vpairs, rows2, seps2)
    normalize_coords([coords1, coords2], [cnt1 > 0, cnt2 > 0])
    bins, grid1, grid2 = density_grid(coords1, cnt1 > 0, coords2, cnt2 > 0, args.cell)
    write_density_csv(args.out, bins, grid1, grid2)
    log.info("wrote %dx%d density grid to %s", bins, bins, args.out)
    return 0


def cmd_sweep(args) -> int:
    cfg = build_config(args)
    _echo_config(cfg)
    g1, _ = _load_graph_arg(args.g1)
    g2, _ = _load_graph_arg(args.g2)
    anchors = load_anchor_map(args.anchors, g1, g2)
    truth = load_ground_truth(args.truth, g1, g2)
    try:
        sizes = [int(b) for b in args.bucket_sizes.split(",") if b]
    except ValueError:
        raise GraphError("bad --bucket-sizes value %r" % args.bucket_sizes) from None
    scenario = bench.Scenario(name=args.name, g1=g1, g2=g2,
                              anchors=anchors, truth=truth)
    rows = bench.sweep([scenario], sizes, cfg)
    bench.write_sweep_csv(args.out, rows)
    log.info("wrote %d sweep rows to %s", len(rows), args.out)
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="galign", description=__doc__)
    parser.add_argument("--version", action="version",
                        version="galign %s" % __version__)
    sub = parser.add_subparsers(dest="cmd")

    p = sub.add_parser("align", help="align two graphs")
    _common_flags(p)
    p.add_argument("--g1", required=True, help="EDGES or VERTICES,EDGES files")
    p.add_argument("--g2", required=True)
    p.add_argument("--anchors", help="anchor TSV; omitted bootstraps anchors")
    p.add_argument("--truth", help="ground-truth TSV for hit/recall bookkeeping")
    p.add_argument("--h-table", dest="h_table",
                   help="external vertex-similarity TSV")
    p.add_argument("--weights", help="token weight TSV")
    p.add_argument("--out", required=True, help="mapping TSV output")
    p.add_argument("--report", help="report JSON output (default OUT.report.json)")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("evaluate", help="score a mapping against ground truth")
    p.add_argument("--log-level", default="info",
                   choices=["debug", "info", "warning", "error"])
    p.add_argument("--mapping", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--report", help="align report JSON for hit count and gain")
    p.add_argument("--out", help="also write the key=value lines to a file")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("perturb", help="build a noisy relabeled copy of a graph")
    _common_flags(p)
    p.add_argument("--g1", required=True)
    p.add_argument("--remove-edges", dest="remove_edges", type=float, default=0.0)
    p.add_argument("--add-vertices", dest="add_vertices", type=float, default=0.0)
    p.add_argument("--add-edges", dest="add_edges", type=float, default=0.0)
    p.add_argument("--rewrite-tokens", dest="rewrite_tokens", type=float, default=0.0,
                   help="fraction of vertex attribute tokens to rewrite")
    p.add_argument("--out-edges", dest="out_edges", required=True)
    p.add_argument("--out-vertices", dest="out_vertices")
    p.add_argument("--out-truth", dest="out_truth")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("heatmap", help="export the positioned-vertex density grid")
    _common_flags(p)
    p.add_argument("--g1", required=True)
    p.add_argument("--g2", required=True)
    p.add_argument("--anchors", help="anchor TSV; omitted bootstraps anchors")
    p.add_argument("--cell", type=float, default=0.1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("sweep", help="rerun one scenario over several bucket sizes")
    _common_flags(p)
    p.add_argument("--g1", required=True)
    p.add_argument("--g2", required=True)
    p.add_argument("--anchors", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--bucket-sizes", dest="bucket_sizes",
                   default="250,500,1000,2000")
    p.add_argument("--name", default="scenario")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        return 1
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(message)s")
    log.setLevel(getattr(logging, args.log_level.upper(), logging.INFO))
    try:
        return args.func(args)
    except (GraphError, OSError) as exc:
        log.error("%s", exc)
        return 2
    except ValueError as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
