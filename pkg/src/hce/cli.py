"""Command-line interface.

Subcommands: cluster, hce, bench (hnrg | hb), sweep, ami, mcc-convert,
tsprep, null. All outputs are CSV/JSON; plotting is left to external
tools. Exit codes: 0 success, 2 validation error, 3 I/O error,
4 infeasible configuration.
"""

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import io, pipeline
from .benchmarks import HbConfig, HnrgConfig, hb_sample, hnrg_critical_degree, hnrg_sample
from .consensus import complete_tree, tree_to_linkage
from .errors import FileFormatError, InfeasibleError, ValidationError
from .metrics import ami, entropy_of_margins, expected_mi, mutual_information
from .metrics import ContingencyTable
from .pipeline import RunConfig, run_cluster, run_null_pipeline, run_benchmark_sweep
from .signals import filter_rois


def _read_config_file(path) -> dict:
    """Flat ``key = value`` option file; '#' starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{lineno}: expected key = value")
            key, value = line.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _apply_config_file(args, parser_defaults):
    if not getattr(args, "config", None):
        return args
    overrides = _read_config_file(args.config)
    for key, raw in overrides.items():
        if not hasattr(args, key):
            raise ValidationError(f"unknown config key {key!r}")
        # flags given on the command line win over the file
        if getattr(args, key) != parser_defaults.get(key):
            continue
        current = parser_defaults.get(key)
        if isinstance(current, bool):
            value = raw.lower() in ("1", "true", "yes", "on")
        elif isinstance(current, int) and not isinstance(current, bool):
            value = int(raw)
        elif isinstance(current, float):
            value = float(raw)
        else:
            value = raw
        setattr(args, key, value)
    return args


def _common_run_flags(p):
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-levels", type=int, default=None)
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: logical cores, or HCE_THREADS)")
    p.add_argument("--config", default=None, help="flat key = value option file")


def _add_cluster(sub):
    p = sub.add_parser("cluster", help="ingest, cluster, and select levels")
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--edges", help="edge list TSV: src<TAB>dst<TAB>weight")
    grp.add_argument("--matrix", help="dense distance matrix (CSV or HCEM binary)")
    grp.add_argument("--timeseries", help="time series (CSV or HCET binary)")
    grp.add_argument("--points", help="point cloud CSV")
    grp.add_argument("--linkage", help="precomputed linkage CSV (skips clustering)")
    p.add_argument("--distance", choices=pipeline.DISTANCES, default=None)
    p.add_argument("--log1p", action="store_true",
                   help="ingest transform w = log(1 + f) for edge weights")
    _common_run_flags(p)


def _add_hce(sub):
    p = sub.add_parser("hce", help="level selection only, from a linkage CSV")
    p.add_argument("--linkage", required=True)
    _common_run_flags(p)


def _add_bench(sub):
    p = sub.add_parser("bench", help="generate one benchmark instance")
    kinds = p.add_subparsers(dest="kind", required=True)

    h = kinds.add_parser("hnrg", help="symmetric nested hierarchy")
    h.add_argument("--s0", type=int, default=10)
    h.add_argument("--r", type=int, default=4)
    h.add_argument("--l", type=int, default=4)
    h.add_argument("--mean-degree", type=float, required=True)
    h.add_argument("--rho", type=float, default=1.0)
    h.add_argument("--clamp", action="store_true",
                   help="cap connection probabilities at 1 instead of erroring")
    h.add_argument("--critical-degrees", action="store_true",
                   help="also print the per-level detectability thresholds")
    _common_run_flags(h)

    b = kinds.add_parser("hb", help="asymmetric hierarchy")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--levels", type=int, required=True)
    b.add_argument("--edge-fractions", required=True,
                   help="comma-separated p_0..p_L summing to 1")
    _common_run_flags(b)


def _add_sweep(sub):
    p = sub.add_parser("sweep", help="AMI table over a benchmark parameter grid")
    kinds = p.add_subparsers(dest="kind", required=True)

    h = kinds.add_parser("hnrg")
    h.add_argument("--s0", type=int, default=10)
    h.add_argument("--r", type=int, default=4)
    h.add_argument("--l", type=int, default=4)
    h.add_argument("--rho", type=float, default=1.0)
    h.add_argument("--k-grid", required=True, help="comma-separated mean degrees")
    h.add_argument("--instances", type=int, default=10)
    h.add_argument("--best-cut", action="store_true")
    h.add_argument("--clamp", action="store_true")
    _common_run_flags(h)

    b = kinds.add_parser("hb")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--levels", type=int, default=3)
    b.add_argument("--p1-grid", required=True)
    b.add_argument("--p2-grid", required=True)
    b.add_argument("--p-background", type=float, default=0.05)
    b.add_argument("--instances", type=int, default=10)
    b.add_argument("--best-cut", action="store_true")
    _common_run_flags(b)


def _add_misc(sub):
    p = sub.add_parser("ami", help="compare two partition CSVs")
    p.add_argument("partition_u")
    p.add_argument("partition_v")

    p = sub.add_parser("mcc-convert", help="consensus tree -> linkage CSV")
    p.add_argument("--tree", required=True, help="CSV: parent,child,similarity")
    p.add_argument("--sc", required=True, help="CSV: node,community (finest partition)")
    p.add_argument("--out", required=True, help="output linkage CSV path")

    p = sub.add_parser("tsprep", help="time-series quality filter")
    p.add_argument("--timeseries", required=True)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("null", help="null-model pipeline with NCT estimation")
    p.add_argument("--timeseries", required=True)
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--regions", default=None, help="CSV: roi,region")
    _common_run_flags(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hce",
        description="Hierarchical clustering entropy toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_cluster(sub)
    _add_hce(sub)
    _add_bench(sub)
    _add_sweep(sub)
    _add_misc(sub)
    return parser


def _parse_grid(text) -> list:
    return [float(v) for v in text.split(",") if v.strip()]


def _cmd_cluster(args) -> int:
    for kind in ("edges", "matrix", "timeseries", "points", "linkage"):
        path = getattr(args, kind)
        if path:
            cfg = RunConfig(input_kind=kind, input_path=path, out_dir=args.out,
                            distance=args.distance, log1p=args.log1p,
                            max_levels=args.max_levels, seed=args.seed,
                            threads=args.threads)
            break
    run_cluster(cfg)
    return 0


def _cmd_hce(args) -> int:
    cfg = RunConfig(input_kind="linkage", input_path=args.linkage, out_dir=args.out,
                    max_levels=args.max_levels, seed=args.seed, threads=args.threads)
    run_cluster(cfg)
    return 0


def _cmd_bench(args) -> int:
    out = Path(args.out)
    if args.kind == "hnrg":
        cfg = HnrgConfig(s0=args.s0, r=args.r, l=args.l, mean_degree=args.mean_degree,
                         rho=args.rho, seed=args.seed)
        network = hnrg_sample(cfg, clamp=args.clamp)
        cfg_dict = asdict(cfg)
        cfg_dict["clamp"] = args.clamp
        stats = pipeline.write_benchmark_outputs(out, network, cfg_dict)
        if args.critical_degrees:
            crit = {level: hnrg_critical_degree(cfg, level) for level in range(1, cfg.l)}
            io.write_json(out / "critical_degrees.json", crit)
    else:
        fractions = tuple(_parse_grid(args.edge_fractions))
        cfg = HbConfig(n_nodes=args.n, levels=args.levels, edge_fractions=fractions,
                       seed=args.seed)
        network = hb_sample(cfg)
        stats = pipeline.write_benchmark_outputs(out, network, asdict(cfg))
    print(json.dumps(stats, sort_keys=True))
    return 0


def _cmd_sweep(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "hnrg":
        cells = [{"s0": args.s0, "r": args.r, "l": args.l, "rho": args.rho,
                  "mean_degree": k} for k in _parse_grid(args.k_grid)]
        rows = run_benchmark_sweep("hnrg", cells, args.instances, seed=args.seed,
                                   threads=args.threads, best_cut=args.best_cut,
                                   clamp=args.clamp)
    else:
        cells = []
        for p1 in _parse_grid(args.p1_grid):
            for p2 in _parse_grid(args.p2_grid):
                p0 = 1.0 - p1 - p2 - args.p_background
                cells.append({"n_nodes": args.n, "levels": args.levels,
                              "edge_fractions": (p0, p1, p2, args.p_background)})
        rows = run_benchmark_sweep("hb", cells, args.instances, seed=args.seed,
                                   threads=args.threads, best_cut=args.best_cut)
    pipeline.write_sweep_csv(out / "sweep.csv", rows)
    pipeline._manifest(out, f"sweep-{args.kind}", {
        "cells": [r["cell"] for r in rows], "instances": args.instances,
        "seed": args.seed})
    return 0


def _cmd_ami(args) -> int:
    u = io.read_partition_csv(args.partition_u)
    v = io.read_partition_csv(args.partition_v)
    table = ContingencyTable.from_partitions(u, v)
    doc = {
        "mi": mutual_information(u, v),
        "expected_mi": expected_mi(table.row_sums, table.col_sums),
        "h_u": entropy_of_margins(table.row_sums),
        "h_v": entropy_of_margins(table.col_sums),
        "ami": ami(u, v),
    }
    print(json.dumps(doc, sort_keys=True))
    return 0


def _cmd_mcc_convert(args) -> int:
    tree = io.read_consensus_tree(args.tree, args.sc)
    edges, n = complete_tree(tree)
    io.write_linkage_csv(args.out, tree_to_linkage(edges, n))
    return 0


def _cmd_tsprep(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    m = io.read_time_series(args.timeseries)
    kept, diag = filter_rois(m)
    with open(out / "rois.csv", "w") as fh:
        fh.write("roi,skewness,max_z,kept\n")
        keep = np.zeros(m.n_rows, dtype=bool)
        keep[kept] = True
        for i in range(m.n_rows):
            sk = "" if np.isnan(diag.skewness[i]) else io.fmt_float(diag.skewness[i])
            mz = "" if np.isnan(diag.max_z[i]) else io.fmt_float(diag.max_z[i])
            fh.write(f"{i},{sk},{mz},{str(bool(keep[i])).lower()}\n")
    io.write_json(out / "tsprep.json", {
        "n_rows": m.n_rows, "n_kept": int(kept.size),
        "dropped_constant": diag.constant.tolist(),
    })
    print(json.dumps({"kept": int(kept.size), "total": m.n_rows}))
    return 0


def _cmd_null(args) -> int:
    cfg = RunConfig(input_kind="timeseries", input_path=args.timeseries,
                    out_dir=args.out, max_levels=args.max_levels,
                    null_instances=args.instances, seed=args.seed,
                    threads=args.threads, regions_path=args.regions)
    run_null_pipeline(cfg)
    return 0


_HANDLERS = {
    "cluster": _cmd_cluster,
    "hce": _cmd_hce,
    "bench": _cmd_bench,
    "sweep": _cmd_sweep,
    "ami": _cmd_ami,
    "mcc-convert": _cmd_mcc_convert,
    "tsprep": _cmd_tsprep,
    "null": _cmd_null,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if hasattr(args, "config"):
            args = _apply_config_file(args, _collect_defaults(parser))
        return _HANDLERS[args.command](args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 4
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FileFormatError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


def _collect_defaults(parser) -> dict:
    defaults = {}
    stack = [parser]
    while stack:
        p = stack.pop()
        for action in p._actions:
            if isinstance(action, argparse._SubParsersAction):
                stack.extend(action.choices.values())
            elif action.dest != "help":
                defaults.setdefault(action.dest, action.default)
    return defaults


if __name__ == "__main__":
    sys.exit(main())
