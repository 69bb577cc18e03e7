"""Average-linkage agglomerative clustering (UPGMA).

``upgma_linkage`` runs the nearest-neighbor-chain algorithm directly on
the condensed distance layout: O(n^2) candidate evaluations and O(n)
auxiliary memory beyond one working copy of the distances, followed by a
stable re-sort of the discovered merges by distance. Average linkage is
reducible, so the chain construction is exact.

``upgma_naive_oracle`` is the reference implementation: it recomputes
every inter-cluster average from the original matrix at each step. The
two agree exactly on inputs in general position; the oracle's fixed
lexicographic tie rule makes it the arbiter on tied inputs.
"""

import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .distances import CondensedDistances, condensed_size
from .errors import NonFiniteDistance, TooLargeForOracle, ValidationError
from .linkage import Linkage, validate_linkage

ORACLE_LIMIT = 512


@dataclass
class UpgmaStats:
    """Work counters: candidate distances examined during nearest-neighbor
    scans plus distance-update operations. Scales as Theta(n^2)."""

    scan_evaluations: int = 0
    update_operations: int = 0

    @property
    def total(self) -> int:
        return self.scan_evaluations + self.update_operations


def _check(d: CondensedDistances):
    if d.n < 2:
        raise ValidationError("need at least 2 observations")
    if not np.all(np.isfinite(d.values)):
        raise NonFiniteDistance()


def upgma_linkage(d: CondensedDistances, spill_dir=None) -> Linkage:
    """UPGMA dendrogram of a condensed distance matrix.

    ``spill_dir`` backs the working distance copy with a memory-mapped
    temporary file instead of RAM, for runs near the memory floor.
    """
    linkage, _ = upgma_linkage_with_stats(d, spill_dir=spill_dir)
    return linkage


def upgma_linkage_with_stats(d: CondensedDistances, spill_dir=None):
    """Same as :func:`upgma_linkage` but also returns the work counters."""
    _check(d)
    n = d.n
    stats = UpgmaStats()

    if spill_dir is not None:
        fd, path = tempfile.mkstemp(suffix=".hce-dist", dir=spill_dir)
        os.close(fd)
        vals = np.memmap(path, dtype=np.float64, mode="w+", shape=(condensed_size(n),))
        vals[:] = d.values
    else:
        path = None
        vals = d.values.astype(np.float64, copy=True)

    try:
        merges = _nn_chain(vals, n, stats)
    finally:
        if path is not None:
            del vals
            os.unlink(path)

    rows = _relabel(merges, n)
    return validate_linkage(rows, n), stats


def _nn_chain(vals: np.ndarray, n: int, stats: UpgmaStats):
    # base[i] + j == flat index of pair (i, j) for i < j
    idx = np.arange(n, dtype=np.int64)
    base = n * idx - idx * (idx + 1) // 2 - idx - 1

    active = np.ones(n, dtype=bool)
    size = np.ones(n, dtype=np.int64)
    row = np.empty(n)
    gather = np.empty(n, dtype=np.int64)
    n_active = n
    chain: list[int] = []
    merges = []  # (slot_lo, slot_hi, distance, size_lo_at_merge, size_hi_at_merge)

    def fill_row(x: int, out: np.ndarray):
        if x > 0:
            np.add(base[:x], x, out=gather[:x])
            np.take(vals, gather[:x], out=out[:x])
        if x < n - 1:
            start = base[x] + x + 1
            out[x + 1:] = vals[start:start + (n - 1 - x)]
        out[x] = np.inf

    row_b = np.empty(n)
    while n_active > 1:
        if not chain:
            chain.append(int(np.argmax(active)))
        while True:
            x = chain[-1]
            fill_row(x, row)
            row[~active] = np.inf
            y = int(np.argmin(row))
            dmin = row[y]
            stats.scan_evaluations += n_active - 1
            if len(chain) >= 2 and row[chain[-2]] == dmin:
                y = chain[-2]
            if len(chain) >= 2 and y == chain[-2]:
                break
            chain.append(y)
        b = chain.pop()
        a = chain.pop()
        lo, hi = (a, b) if a < b else (b, a)
        merges.append((lo, hi, float(dmin), int(size[lo]), int(size[hi])))

        # weighted average-linkage update, written into the surviving slot
        fill_row(lo, row)
        fill_row(hi, row_b)
        s_lo, s_hi = size[lo], size[hi]
        total = s_lo + s_hi
        np.multiply(row, s_lo / total, out=row)
        row += (s_hi / total) * row_b
        stats.update_operations += n_active - 2
        if lo > 0:
            np.add(base[:lo], lo, out=gather[:lo])
            vals[gather[:lo]] = row[:lo]
        if lo < n - 1:
            start = base[lo] + lo + 1
            vals[start:start + (n - 1 - lo)] = row[lo + 1:]
        active[hi] = False
        size[lo] = total
        n_active -= 1
    return merges


def _relabel(merges, n: int):
    """Stable-sort merges by distance and convert slot pairs to linkage ids."""
    dist = np.array([m[2] for m in merges])
    order = np.argsort(dist, kind="stable")
    parent = np.arange(n, dtype=np.int64)
    node_id = np.arange(n, dtype=np.int64)
    acc_size = np.ones(n, dtype=np.int64)

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    rows = np.empty((n - 1, 3))
    for m, oi in enumerate(order):
        lo, hi, dval, _, _ = merges[oi]
        ra, rb = find(lo), find(hi)
        ia, ib = node_id[ra], node_id[rb]
        left, right = (ia, ib) if ia < ib else (ib, ia)
        parent[ra] = rb
        acc_size[rb] += acc_size[ra]
        node_id[rb] = n + m
        rows[m] = (left, right, dval)
    return rows


def upgma_naive_oracle(d: CondensedDistances, limit: int = ORACLE_LIMIT) -> Linkage:
    """Direct O(n^3) UPGMA, recomputing all-pair cluster averages each step.

    Ties are broken by the smallest (left id, right id) pair of linkage
    node ids. Guarded to n <= ``limit`` because of the cubic cost.
    """
    _check(d)
    n = d.n
    if n > limit:
        raise TooLargeForOracle(n, limit)
    square = d.to_square()

    ids = list(range(n))
    members = [[i] for i in range(n)]
    rows = []
    for m in range(n - 1):
        k = len(ids)
        ind = np.zeros((k, n))
        for c, mem in enumerate(members):
            ind[c, mem] = 1.0
        counts = ind.sum(axis=1)
        avg = (ind @ square @ ind.T) / np.outer(counts, counts)

        iu, ju = np.triu_indices(k, 1)
        id_arr = np.array(ids)
        id_i = np.minimum(id_arr[iu], id_arr[ju])
        id_j = np.maximum(id_arr[iu], id_arr[ju])
        pick = np.lexsort((id_j, id_i, avg[iu, ju]))[0]
        a, b = int(iu[pick]), int(ju[pick])
        rows.append((id_i[pick], id_j[pick], avg[a, b]))
        members[a] = members[a] + members[b]
        ids[a] = n + m
        del members[b], ids[b]
    return validate_linkage(rows, n)
