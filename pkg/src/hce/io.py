"""File formats: CSV and binary readers/writers for every toolkit artifact.

Text formats are plain CSV with headers; floats are written with up to 17
significant digits so values round-trip exactly. Binary formats carry a
16-byte header: a 4-byte magic (``HCEM`` for square matrices, ``HCET``
for time series), two little-endian u32 dimension fields, and a reserved
u32; the payload is row-major little-endian float64 (or float32 when the
dtype tag says so).
"""

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .consensus import ConsensusTree
from .distances import CondensedDistances, WeightedGraph
from .errors import FileFormatError, ValidationError
from .linkage import Linkage, Partition, validate_linkage
from .signals import TimeSeriesMatrix

MATRIX_MAGIC = b"HCEM"
SERIES_MAGIC = b"HCET"
_DTYPE_TAGS = {0: "<f8", 1: "<f4"}


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


# --- linkage ---

def write_linkage_csv(path, linkage: Linkage):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["left", "right", "distance", "size"])
        for rec in linkage:
            w.writerow([rec.left, rec.right, fmt_float(rec.distance), rec.size])


def read_linkage_csv(path) -> Linkage:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != ["left", "right", "distance"]:
            raise FileFormatError(f"{path}: expected header left,right,distance[,size]")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise FileFormatError(f"{path}:{lineno}: {exc}") from exc
    return validate_linkage(rows, len(rows) + 1)


# --- partition ---

def write_partition_csv(path, partition: Partition):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "label"])
        for node, label in enumerate(partition.membership.tolist()):
            w.writerow([node, label])


def read_partition_csv(path) -> Partition:
    pairs = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["node", "label"]:
            raise FileFormatError(f"{path}: expected header node,label")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                pairs.append((int(row[0]), int(float(row[1]))))
            except ValueError as exc:
                raise FileFormatError(f"{path}:{lineno}: {exc}") from exc
    if not pairs:
        raise FileFormatError(f"{path}: no rows")
    pairs.sort()
    nodes = [p[0] for p in pairs]
    if nodes != list(range(len(pairs))):
        raise FileFormatError(f"{path}: node ids must cover 0..{len(pairs) - 1} exactly")
    return Partition.from_labels([p[1] for p in pairs])


# --- edge lists ---

def read_edge_list_tsv(path, log1p: bool = False):
    """TSV ``src<TAB>dst<TAB>weight`` (weight optional, default 1).

    Node ids need not be contiguous; they are relabeled to 0..n-1 in
    ascending id order. Returns ``(graph, id_map)`` where ``id_map`` maps
    new ids back to the original ones.
    """
    src, dst, wgt = [], [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) == 1:
                parts = line.split()
            if len(parts) < 2:
                raise FileFormatError(f"{path}:{lineno}: expected src<TAB>dst[<TAB>weight]")
            try:
                src.append(int(parts[0]))
                dst.append(int(parts[1]))
                wgt.append(float(parts[2]) if len(parts) > 2 else 1.0)
            except ValueError as exc:
                raise FileFormatError(f"{path}:{lineno}: {exc}") from exc
    if not src:
        raise FileFormatError(f"{path}: no edges")
    ids = np.unique(np.concatenate([src, dst]))
    lookup = {int(v): i for i, v in enumerate(ids.tolist())}
    edges = np.array([[lookup[s], lookup[d]] for s, d in zip(src, dst)], dtype=np.int64)
    graph = WeightedGraph.from_edges(len(ids), edges, np.array(wgt), log1p=log1p)
    return graph, ids


def write_edge_list_tsv(path, edges, weights=None):
    edges = np.asarray(edges)
    with open(path, "w") as fh:
        for i in range(edges.shape[0]):
            if weights is None:
                fh.write(f"{edges[i, 0]}\t{edges[i, 1]}\t1\n")
            else:
                fh.write(f"{edges[i, 0]}\t{edges[i, 1]}\t{fmt_float(weights[i])}\n")


# --- dense matrices and time series ---

def _write_binary(path, magic: bytes, a: int, b: int, payload: np.ndarray):
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack("<III", a, b, 0))
        fh.write(np.ascontiguousarray(payload, dtype="<f8").tobytes())


def _read_binary(path, magic: bytes):
    with open(path, "rb") as fh:
        head = fh.read(16)
        if len(head) != 16 or head[:4] != magic:
            raise FileFormatError(f"{path}: bad magic, expected {magic.decode()}")
        a, b, _ = struct.unpack("<III", head[4:16])
        payload = fh.read()
    return a, b, payload


def write_dense_matrix(path, matrix, binary: bool = True):
    matrix = np.asarray(matrix, dtype=np.float64)
    if binary:
        _write_binary(path, MATRIX_MAGIC, matrix.shape[0], 0, matrix)
    else:
        np.savetxt(path, matrix, fmt="%.17g", delimiter=",")


def read_dense_matrix(path) -> np.ndarray:
    path = Path(path)
    with open(path, "rb") as fh:
        is_binary = fh.read(4) == MATRIX_MAGIC
    if is_binary:
        n, tag, payload = _read_binary(path, MATRIX_MAGIC)
        if tag not in _DTYPE_TAGS:
            raise FileFormatError(f"{path}: unknown dtype tag {tag}")
        raw = np.frombuffer(payload, dtype=_DTYPE_TAGS[tag]).astype(np.float64)
        if raw.size != n * n:
            raise FileFormatError(f"{path}: payload holds {raw.size} values, expected {n * n}")
        return raw.reshape(n, n)
    try:
        out = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc
    return out


def read_distances(path) -> CondensedDistances:
    return CondensedDistances.from_square(read_dense_matrix(path), atol=0.0)


def write_time_series(path, m: TimeSeriesMatrix, binary: bool = True):
    if binary:
        _write_binary(path, SERIES_MAGIC, m.n_rows, m.n_times, m.data)
    else:
        np.savetxt(path, m.data, fmt="%.17g", delimiter=",")


def read_time_series(path) -> TimeSeriesMatrix:
    path = Path(path)
    with open(path, "rb") as fh:
        is_binary = fh.read(4) == SERIES_MAGIC
    if is_binary:
        rows, cols, payload = _read_binary(path, SERIES_MAGIC)
        raw = np.frombuffer(payload, dtype="<f8")
        if raw.size != rows * cols:
            raise FileFormatError(
                f"{path}: payload holds {raw.size} values, expected {rows * cols}")
        return TimeSeriesMatrix(raw.reshape(rows, cols).astype(np.float64))
    try:
        data = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc
    return TimeSeriesMatrix(data)


def read_point_cloud(path) -> np.ndarray:
    try:
        return np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


# --- consensus tree ---

def read_consensus_tree(tree_path, membership_path) -> ConsensusTree:
    rows = []
    with open(tree_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != ["parent", "child", "similarity"]:
            raise FileFormatError(f"{tree_path}: expected header parent,child,similarity")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append((int(row[0]), int(row[1]), float(row[2])))
            except ValueError as exc:
                raise FileFormatError(f"{tree_path}:{lineno}: {exc}") from exc
    finest = []
    with open(membership_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["node", "community"]:
            raise FileFormatError(f"{membership_path}: expected header node,community")
        pairs = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                pairs.append((int(row[0]), int(row[1])))
            except ValueError as exc:
                raise FileFormatError(f"{membership_path}:{lineno}: {exc}") from exc
    pairs.sort()
    if [p[0] for p in pairs] != list(range(len(pairs))):
        raise FileFormatError(f"{membership_path}: node ids must cover 0..{len(pairs) - 1}")
    finest = [p[1] for p in pairs]
    return ConsensusTree.from_rows(rows, finest)


def write_consensus_tree(tree_path, membership_path, tree: ConsensusTree):
    with open(tree_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["parent", "child", "similarity"])
        for e in tree.edges:
            w.writerow([e.parent, e.child, fmt_float(e.similarity)])
    with open(membership_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "community"])
        for node, cid in enumerate(tree.finest.tolist()):
            w.writerow([node, cid])


# --- annotations ---

def read_coordinates_csv(path) -> np.ndarray:
    """``roi,x,y,z`` rows (z optional); returns coordinates ordered by roi."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0].strip() != "roi":
            raise FileFormatError(f"{path}: expected header roi,x,y[,z]")
        for row in reader:
            if row:
                rows.append((int(row[0]), [float(v) for v in row[1:]]))
    rows.sort()
    return np.array([r[1] for r in rows])


def read_regions_csv(path) -> dict:
    """``roi,region`` rows; returns region name -> set of roi ids, in
    first-appearance order (the tie-break order for assignment)."""
    regions: dict = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["roi", "region"]:
            raise FileFormatError(f"{path}: expected header roi,region")
        for row in reader:
            if row:
                regions.setdefault(row[1].strip(), set()).add(int(row[0]))
    return regions


# --- json ---

def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)
