"""End-to-end runs: ingest, distances, clustering, level selection, reports.

Owns all file layout and configuration. Every run writes a manifest that
records the resolved configuration, seed, and library version; reruns
from the manifest reproduce the artifacts byte for byte on one platform.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import io
from .benchmarks import (
    HbConfig,
    HnrgConfig,
    PlantedNetwork,
    finest_shared_level,
    hb_sample,
    hnrg_sample,
)
from .consensus import complete_tree, tree_to_linkage
from .distances import (
    CondensedDistances,
    WeightedGraph,
    correlation_distances,
    euclidean_distances,
    graph_cosine_distances,
)
from .entropy import HierarchyResult, extract_hierarchy
from .errors import ValidationError
from .linkage import Linkage, Partition, cut_at_k
from .metrics import ami, jaccard_assign, jaccard_index
from .seeds import derive_int
from .signals import (
    SizeEnsemble,
    TimeSeriesMatrix,
    circular_shift_null,
    filter_communities_by_nct,
    filter_rois,
    nct_details,
)
from .upgma import upgma_linkage

__version__ = "0.1.0"

INPUT_KINDS = ("edges", "matrix", "timeseries", "points", "linkage", "consensus")
DISTANCES = ("graph-cosine", "correlation", "euclidean")
_DEFAULT_DISTANCE = {"edges": "graph-cosine", "timeseries": "correlation",
                     "points": "euclidean"}


def default_threads() -> int:
    env = os.environ.get("HCE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class RunConfig:
    input_kind: str
    input_path: str
    out_dir: str
    membership_path: Optional[str] = None  # consensus finest-partition file
    distance: Optional[str] = None
    log1p: bool = False
    max_levels: Optional[int] = None
    null_instances: int = 100
    seed: int = 0
    threads: Optional[int] = None
    regions_path: Optional[str] = None

    def __post_init__(self):
        if self.input_kind not in INPUT_KINDS:
            raise ValidationError(f"unknown input kind {self.input_kind!r}")
        if self.distance is not None and self.distance not in DISTANCES:
            raise ValidationError(f"unknown distance {self.distance!r}")
        if self.input_kind == "consensus" and not self.membership_path:
            raise ValidationError("consensus input needs the finest-partition file")

    def resolved_distance(self) -> Optional[str]:
        if self.distance is not None:
            return self.distance
        return _DEFAULT_DISTANCE.get(self.input_kind)


def expand_membership(sub_labels: np.ndarray, kept: np.ndarray, n_total: int) -> Partition:
    """Spread a partition of a node subset over all nodes; nodes outside
    the subset become singleton communities."""
    full = np.full(n_total, -1, dtype=np.int64)
    full[kept] = sub_labels
    k = int(sub_labels.max()) + 1 if sub_labels.size else 0
    missing = np.nonzero(full < 0)[0]
    full[missing] = k + np.arange(missing.size)
    return Partition.from_labels(full)


def graph_to_linkage(graph: WeightedGraph) -> tuple[Linkage, np.ndarray]:
    """Cosine-cluster a graph, excluding isolated nodes.

    Returns the linkage over connected nodes plus the index of the nodes
    that were clustered; isolated nodes have no connectivity direction
    and are treated as singleton communities downstream.
    """
    norms = graph.norms()
    kept = np.nonzero(norms > 0)[0]
    if kept.size < 2:
        raise ValidationError("fewer than 2 non-isolated nodes; nothing to cluster")
    if kept.size == graph.n:
        sub = graph
    else:
        sub = WeightedGraph(graph.weights[np.ix_(kept, kept)].copy())
    return upgma_linkage(graph_cosine_distances(sub)), kept


def hierarchy_report(hierarchy: HierarchyResult, n_nodes: int) -> dict:
    levels = []
    for lv in hierarchy.levels:
        levels.append({
            "label": lv.label,
            "n_nodes": lv.n_nodes,
            "selected_k": lv.k,
            "hce": lv.hce,
            "membership_csv": f"partition_{lv.label}.csv",
            "profile": {
                "k": lv.profile.k.tolist(),
                "hce": lv.profile.hce.tolist(),
            },
        })
    return {
        "n_nodes": n_nodes,
        "log_base": "e",
        "stopping_reason": hierarchy.stopping_reason.value,
        "levels": levels,
    }


def _write_hierarchy(out: Path, hierarchy: HierarchyResult, n_nodes: int):
    io.write_json(out / "hierarchy.json", hierarchy_report(hierarchy, n_nodes))
    for lv in hierarchy.levels:
        io.write_partition_csv(out / f"partition_{lv.label}.csv", lv.membership)


def _manifest(out: Path, command: str, cfg_dict: dict, extra: Optional[dict] = None):
    doc = {"command": command, "config": cfg_dict, "version": __version__}
    if extra:
        doc.update(extra)
    io.write_json(out / "manifest.json", doc)


def run_cluster(cfg: RunConfig) -> dict:
    """Ingest one input, build or load its dendrogram, select levels,
    and write the full report bundle into the output directory."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    distance = cfg.resolved_distance()
    notes = {}

    kind = cfg.input_kind
    kept = None
    n_total = None
    if kind == "linkage":
        linkage = io.read_linkage_csv(cfg.input_path)
    elif kind == "consensus":
        tree = io.read_consensus_tree(cfg.input_path, cfg.membership_path)
        edges, n = complete_tree(tree)
        linkage = tree_to_linkage(edges, n)
    elif kind == "matrix":
        linkage = upgma_linkage(io.read_distances(cfg.input_path))
    elif kind == "points":
        pts = io.read_point_cloud(cfg.input_path)
        if distance != "euclidean":
            raise ValidationError("point clouds use the euclidean distance")
        linkage = upgma_linkage(euclidean_distances(pts))
    elif kind == "timeseries":
        m = io.read_time_series(cfg.input_path)
        if distance != "correlation":
            raise ValidationError("time series use the correlation distance")
        linkage = upgma_linkage(correlation_distances(m.data))
    elif kind == "edges":
        graph, original_ids = io.read_edge_list_tsv(cfg.input_path, log1p=cfg.log1p)
        if distance != "graph-cosine":
            raise ValidationError("edge lists use the graph-cosine distance")
        n_total = graph.n
        linkage, kept = graph_to_linkage(graph)
        notes["n_nodes"] = n_total
        notes["n_isolated"] = n_total - kept.size
        notes["node_ids_csv"] = "nodes.csv"
        with open(out / "nodes.csv", "w") as fh:
            fh.write("node,original_id\n")
            for i, oid in enumerate(original_ids.tolist()):
                fh.write(f"{i},{oid}\n")

    hierarchy = extract_hierarchy(linkage, max_levels=cfg.max_levels)
    if kept is not None and kept.size != n_total:
        # re-express levels over all nodes, isolated nodes as singletons
        levels = tuple(
            lv.__class__(lv.label, lv.n_nodes, lv.k, lv.hce,
                         expand_membership(lv.membership.membership, kept, n_total),
                         lv.profile)
            for lv in hierarchy.levels)
        hierarchy = HierarchyResult(levels, hierarchy.stopping_reason)

    io.write_linkage_csv(out / "linkage.csv", linkage)
    _write_hierarchy(out, hierarchy, n_total if n_total is not None else linkage.n_leaves)
    cfg_dict = asdict(cfg)
    cfg_dict["distance"] = distance
    _manifest(out, "cluster", cfg_dict, {"notes": notes} if notes else None)
    return {"out": str(out), "hierarchy": hierarchy, "linkage": linkage}


def best_cut_ami(linkage: Linkage, truth, kept=None, n_total=None) -> tuple[int, float]:
    """Exhaustive scan: the dendrogram cut maximizing AMI against a
    reference partition. ``kept``/``n_total`` expand subgraph cuts over
    the full node set first."""
    best_k, best = 1, -np.inf
    for k in range(1, linkage.n_leaves + 1):
        part = cut_at_k(linkage, k)
        if kept is not None:
            part = expand_membership(part.membership, kept, n_total)
        score = ami(part, truth)
        if score > best:
            best_k, best = k, score
    return best_k, float(best)


def level_amis(hierarchy: HierarchyResult, truth_levels, kept=None, n_total=None) -> list:
    """AMI of each selected level R_i against ground-truth level i;
    ``nan`` where the hierarchy has no i-th level."""
    out = []
    for i, truth in enumerate(truth_levels):
        if i >= len(hierarchy.levels):
            out.append(float("nan"))
            continue
        part = hierarchy.levels[i].membership
        if kept is not None and len(part) != len(truth):
            part = expand_membership(part.membership, kept, n_total)
        out.append(float(ami(part, truth)))
    return out


def _cluster_network(network: PlantedNetwork, max_levels=None):
    graph = WeightedGraph.from_edges(network.n_nodes, network.edges)
    linkage, kept = graph_to_linkage(graph)
    hierarchy = extract_hierarchy(linkage, max_levels=max_levels)
    return linkage, kept, hierarchy


def evaluate_instance(network: PlantedNetwork, max_levels=None, best_cut=False) -> dict:
    """Cluster one planted network and score every level against truth."""
    n = network.n_nodes
    linkage, kept, hierarchy = _cluster_network(network, max_levels)
    amis = level_amis(hierarchy, network.ground_truth, kept, n)
    result = {"ami": amis, "n_levels": len(hierarchy.levels)}
    if best_cut:
        result["best_cut_ami"] = [
            best_cut_ami(linkage, truth, kept, n)[1] for truth in network.ground_truth]
    return result


def run_benchmark_sweep(kind: str, cells: list, instances: int, seed: int = 0,
                        threads: Optional[int] = None, best_cut: bool = False,
                        clamp: bool = False) -> list:
    """Mean and standard error of per-level AMI over a grid of generator
    configurations.

    ``cells`` holds dicts of config fields. Infeasible cells (for the
    asymmetric generator, a negative implied finest fraction) are marked
    skipped rather than aborting the sweep. Instances run in a thread
    pool; every instance derives its own seed from (sweep seed, cell,
    instance), so results do not depend on scheduling.
    """
    if kind not in ("hnrg", "hb"):
        raise ValidationError(f"unknown benchmark kind {kind!r}")

    def one(cell_idx, cell, inst):
        inst_seed = derive_int(seed, f"{kind}-sweep", cell_idx, inst)
        if kind == "hnrg":
            cfg = HnrgConfig(seed=inst_seed, **cell)
            network = hnrg_sample(cfg, clamp=clamp)
        else:
            cfg = HbConfig(seed=inst_seed, **cell)
            network = hb_sample(cfg)
        return evaluate_instance(network, best_cut=best_cut)

    rows = []
    pool = ThreadPoolExecutor(max_workers=threads or default_threads())
    try:
        for cell_idx, cell in enumerate(cells):
            if kind == "hb":
                total = sum(cell["edge_fractions"])
                if min(cell["edge_fractions"]) < 0 or abs(total - 1.0) > 1e-12:
                    rows.append({"cell": cell, "skipped": True})
                    continue
            futures = [pool.submit(one, cell_idx, cell, i) for i in range(instances)]
            results = [f.result() for f in futures]
            n_levels = max(len(r["ami"]) for r in results)
            for level in range(n_levels):
                vals = np.array([r["ami"][level] for r in results])
                vals = np.nan_to_num(vals, nan=0.0)  # missing level = no prediction
                row = {
                    "cell": cell,
                    "level": level,
                    "mean_ami": float(vals.mean()),
                    "sem_ami": float(vals.std(ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0,
                    "instances": instances,
                    "skipped": False,
                }
                if best_cut:
                    bc = np.array([r["best_cut_ami"][level] for r in results])
                    row["mean_best_cut_ami"] = float(bc.mean())
                rows.append(row)
    finally:
        pool.shutdown()
    return rows


def write_sweep_csv(path, rows):
    cells = sorted({k for r in rows for k in r["cell"]})
    headers = [f"cfg_{c}" for c in cells] + [
        "level", "mean_ami", "sem_ami", "mean_best_cut_ami", "instances", "skipped"]
    with open(path, "w") as fh:
        fh.write(",".join(headers) + "\n")
        for r in rows:
            vals = [str(r["cell"].get(c, "")) for c in cells]
            if r.get("skipped"):
                vals += ["", "", "", "", "", "true"]
            else:
                vals += [str(r["level"]), io.fmt_float(r["mean_ami"]),
                         io.fmt_float(r["sem_ami"]),
                         io.fmt_float(r["mean_best_cut_ami"]) if "mean_best_cut_ami" in r else "",
                         str(r["instances"]), "false"]
            fh.write(",".join(vals) + "\n")


def run_null_pipeline(cfg: RunConfig) -> dict:
    """Time-series run with a circular-shift null: filter rows, cluster,
    select levels, estimate the null-community threshold per level, and
    keep only communities above it (with region labels when provided)."""
    if cfg.input_kind != "timeseries":
        raise ValidationError("null pipeline needs a time-series input")
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    max_levels = cfg.max_levels if cfg.max_levels is not None else 3

    m = io.read_time_series(cfg.input_path)
    kept_rows, diagnostics = filter_rois(m)
    kept_matrix = m.subset(kept_rows)

    def pipeline(data) -> HierarchyResult:
        return extract_hierarchy(upgma_linkage(correlation_distances(data)),
                                 max_levels=max_levels)

    hierarchy = pipeline(kept_matrix.data)

    def null_instance(i):
        shifted = circular_shift_null(kept_matrix, derive_int(cfg.seed, "null-instance", i))
        h = pipeline(shifted.data)
        return [lv.membership.sizes() for lv in h.levels]

    pool = ThreadPoolExecutor(max_workers=cfg.threads or default_threads())
    try:
        all_sizes = [f.result() for f in
                     [pool.submit(null_instance, i) for i in range(cfg.null_instances)]]
    finally:
        pool.shutdown()

    regions = io.read_regions_csv(cfg.regions_path) if cfg.regions_path else None
    report_levels = []
    for i, lv in enumerate(hierarchy.levels):
        pooled = [inst[i] for inst in all_sizes if len(inst) > i]
        entry = {"label": lv.label, "selected_k": lv.k,
                 "null_instances_with_level": len(pooled)}
        if pooled:
            details = nct_details(SizeEnsemble.from_partitions(pooled))
            entry["nct"] = details.threshold
            entry["null_histogram"] = details.histogram.tolist()
            entry["bin_edges"] = details.bin_edges.tolist()
            survivors = filter_communities_by_nct(lv.membership, details.threshold)
        else:
            entry["nct"] = None
            survivors = filter_communities_by_nct(lv.membership, None)
        entry["surviving_communities"] = [int(s) for s in survivors]
        if regions:
            labels = {}
            for c in survivors:
                members = np.nonzero(lv.membership.membership == c)[0]
                original = set(kept_rows[members].tolist())
                name = jaccard_assign(original, regions)
                labels[int(c)] = {"region": name,
                                  "jaccard": jaccard_index(original, regions[name])}
            entry["region_labels"] = labels
        else:
            entry["region_labels"] = None  # no region file given
        report_levels.append(entry)

    _write_hierarchy(out, hierarchy, kept_matrix.n_rows)
    io.write_json(out / "null_model.json", {
        "kept_rows": kept_rows.tolist(),
        "dropped_constant_rows": diagnostics.constant.tolist(),
        "n_null_instances": cfg.null_instances,
        "kde": {"bandwidth": "scott", "grid_points": 512},
        "levels": report_levels,
    })
    cfg_dict = asdict(cfg)
    _manifest(out, "null", cfg_dict)
    return {"out": str(out), "hierarchy": hierarchy, "levels": report_levels,
            "kept_rows": kept_rows}


def write_benchmark_outputs(out_dir, network: PlantedNetwork, config_dict: dict) -> dict:
    """Edge list, one ground-truth partition per level, and a manifest
    with realized statistics."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.write_edge_list_tsv(out / "edges.tsv", network.edges)
    for i, part in enumerate(network.ground_truth):
        io.write_partition_csv(out / f"ground_truth_L{i}.csv", part)
    levels = finest_shared_level(network, network.edges[:, 0], network.edges[:, 1])
    counts = np.bincount(levels, minlength=len(network.ground_truth) + 1)
    stats = {
        "n_nodes": network.n_nodes,
        "n_edges": int(network.n_edges),
        "mean_degree": network.mean_degree(),
        "edge_fraction_per_level": (counts / max(network.n_edges, 1)).tolist(),
    }
    _manifest(out, "bench", config_dict, {"realized": stats})
    return stats
