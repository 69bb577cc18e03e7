"""Dendrogram data model: merge lists, cuts, and supernode trimming.

A dendrogram over N observations is stored as an ordered list of N-1
merge records. Leaves carry ids 0..N-1 and the record at position m
creates internal node N+m. Merge distances must be non-decreasing along
the sequence. Cutting after the first N-k merges yields a partition into
k communities; trimming replaces those k communities by supernode leaves
and keeps only the remaining coarse merges.
"""

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .errors import (
    ChildReused,
    IdOutOfRange,
    KOutOfRange,
    NonMonotoneDistances,
    ValidationError,
    WrongRowCount,
)


class MergeRecord(NamedTuple):
    left: int
    right: int
    distance: float
    size: int


@dataclass(frozen=True)
class Linkage:
    """Validated dendrogram: immutable and safe to share across threads.

    Construct through :func:`validate_linkage`; the raw constructor
    assumes the arrays are already consistent.
    """

    n_leaves: int
    lefts: np.ndarray
    rights: np.ndarray
    distances: np.ndarray
    sizes: np.ndarray

    def __post_init__(self):
        for name in ("lefts", "rights", "distances", "sizes"):
            getattr(self, name).setflags(write=False)

    @property
    def n_merges(self) -> int:
        return self.n_leaves - 1

    def __len__(self) -> int:
        return self.n_merges

    def __iter__(self) -> Iterator[MergeRecord]:
        for m in range(self.n_merges):
            yield MergeRecord(int(self.lefts[m]), int(self.rights[m]),
                              float(self.distances[m]), int(self.sizes[m]))

    def row(self, m: int) -> MergeRecord:
        return MergeRecord(int(self.lefts[m]), int(self.rights[m]),
                           float(self.distances[m]), int(self.sizes[m]))

    def to_array(self) -> np.ndarray:
        """(N-1, 4) float array in the standard [left, right, distance, size] layout."""
        out = np.empty((self.n_merges, 4))
        out[:, 0] = self.lefts
        out[:, 1] = self.rights
        out[:, 2] = self.distances
        out[:, 3] = self.sizes
        return out


@dataclass(frozen=True)
class Partition:
    """Node -> community membership with canonical labels.

    Labels are 0, 1, 2, ... in order of first appearance, so two runs
    producing the same grouping serialize identically.
    """

    membership: np.ndarray
    n_communities: int = field(default=0)

    def __post_init__(self):
        self.membership.setflags(write=False)
        if self.n_communities == 0:
            object.__setattr__(self, "n_communities",
                               int(self.membership.max()) + 1 if self.membership.size else 0)

    @classmethod
    def from_labels(cls, labels) -> "Partition":
        """Canonicalize an arbitrary label vector."""
        labels = np.asarray(labels)
        if labels.ndim != 1 or labels.size == 0:
            raise ValidationError("membership must be a non-empty 1-D vector")
        _, first_pos, inverse = np.unique(labels, return_index=True, return_inverse=True)
        order = np.argsort(np.argsort(first_pos, kind="stable"), kind="stable")
        canonical = order[inverse]
        return cls(canonical.astype(np.int64), int(first_pos.size))

    def __len__(self) -> int:
        return int(self.membership.size)

    def sizes(self) -> np.ndarray:
        """Community sizes indexed by label."""
        return np.bincount(self.membership, minlength=self.n_communities)


def as_membership(partition) -> np.ndarray:
    """Accept a Partition or raw label vector; return canonical membership."""
    if isinstance(partition, Partition):
        return partition.membership
    return Partition.from_labels(partition).membership


def validate_linkage(raw_merge_list, n_leaves: int) -> Linkage:
    """Validate a raw merge list of (left, right, distance[, size]) rows.

    Sizes are always recomputed from the tree; a provided size column is
    checked against the recomputed values so inconsistent third-party
    files are rejected rather than silently trusted.
    """
    n = int(n_leaves)
    if n < 1:
        raise ValidationError(f"n_leaves must be positive, got {n}")
    rows = np.asarray(raw_merge_list, dtype=float)
    if rows.size == 0:
        rows = rows.reshape(0, 3)
    if rows.ndim != 2 or rows.shape[1] not in (3, 4):
        raise ValidationError("merge rows must have 3 or 4 columns (left, right, distance[, size])")
    if rows.shape[0] != n - 1:
        raise WrongRowCount(n - 1, rows.shape[0])

    lefts = rows[:, 0].astype(np.int64)
    rights = rows[:, 1].astype(np.int64)
    if not (np.all(rows[:, 0] == lefts) and np.all(rows[:, 1] == rights)):
        raise ValidationError("child ids must be integers")
    distances = rows[:, 2].astype(np.float64)

    sizes = np.empty(n - 1, dtype=np.int64)
    node_size = np.ones(2 * n - 1, dtype=np.int64)
    used = np.zeros(2 * n - 1, dtype=bool)
    prev_d = -np.inf
    for m in range(n - 1):
        li, ri, d = lefts[m], rights[m], distances[m]
        cap = n + m
        for child in (li, ri):
            if child < 0 or child >= cap:
                raise IdOutOfRange(m, int(child))
        if li == ri:
            raise ValidationError(f"row {m} merges node {li} with itself")
        for child in (li, ri):
            if used[child]:
                raise ChildReused(m, int(child))
            used[child] = True
        if not np.isfinite(d) or d < 0:
            raise ValidationError(f"row {m} has invalid distance {d!r}")
        if d < prev_d:
            raise NonMonotoneDistances(m)
        prev_d = d
        sizes[m] = node_size[li] + node_size[ri]
        node_size[n + m] = sizes[m]

    if rows.shape[1] == 4:
        given = rows[:, 3]
        bad = np.nonzero(given != sizes)[0]
        if bad.size:
            m = int(bad[0])
            raise ValidationError(
                f"row {m} declares size {given[m]:g}, recomputed size is {sizes[m]}")

    return Linkage(n, lefts, rights, distances, sizes)


def _roots_after(linkage: Linkage, n_merges: int) -> np.ndarray:
    """Root node id of each leaf after applying the first ``n_merges`` merges."""
    n = linkage.n_leaves
    parent = np.full(2 * n - 1, -1, dtype=np.int64)
    for m in range(n_merges):
        parent[linkage.lefts[m]] = n + m
        parent[linkage.rights[m]] = n + m
    roots = np.empty(n, dtype=np.int64)
    cache = {}
    for leaf in range(n):
        path = []
        node = leaf
        while parent[node] != -1:
            if node in cache:
                node = cache[node]
                break
            path.append(node)
            node = parent[node]
        for p in path:
            cache[p] = node
        roots[leaf] = node
    return roots


def cut_at_k(linkage: Linkage, k: int) -> Partition:
    """Partition into k communities by applying the first N-k merges.

    Defined purely by merge order, so tied distances still yield a unique
    partition per k.
    """
    n = linkage.n_leaves
    if not 1 <= k <= n:
        raise KOutOfRange(k, n)
    roots = _roots_after(linkage, n - k)
    return Partition.from_labels(roots)


def community_sizes(partition) -> np.ndarray:
    """Community sizes of a partition, sorted descending."""
    membership = as_membership(partition)
    counts = np.bincount(membership)
    return np.sort(counts)[::-1]


def trim_to_supernodes(linkage: Linkage, k: int) -> tuple[Linkage, Partition]:
    """Collapse the k communities at cut k into supernode leaves.

    Returns the coarse dendrogram (the last k-1 merges, re-indexed so the
    community with canonical label c becomes leaf c) together with the
    node -> supernode partition. Merge distances are preserved; supernode
    sizes count supernodes, not original nodes.
    """
    n = linkage.n_leaves
    if not 1 < k <= n:
        raise KOutOfRange(k, n, lo=2)
    cut = n - k
    partition = cut_at_k(linkage, k)
    roots = _roots_after(linkage, cut)

    # community roots map to their canonical label; later internal nodes
    # are renumbered to k, k+1, ... in merge order
    old_to_new = np.full(2 * n - 1, -1, dtype=np.int64)
    old_to_new[roots] = partition.membership
    rows = []
    for m in range(cut, n - 1):
        li = old_to_new[linkage.lefts[m]]
        ri = old_to_new[linkage.rights[m]]
        rows.append((li, ri, linkage.distances[m]))
        old_to_new[n + m] = k + (m - cut)
    trimmed = validate_linkage(rows, k)
    return trimmed, partition
