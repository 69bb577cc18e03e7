"""Adapter from top-down consensus-clustering output to a merge list.

The upstream tool emits a finest-level membership vector plus a sparse
"tree" of community-to-community merges annotated with similarities in
(0, 1]; it never links leaf nodes to their communities. Two stages turn
this into a standard dendrogram: (1) completion -- renumber communities
above the N network nodes and attach each node to its finest community at
similarity 1; (2) conversion -- walk edges by decreasing similarity,
merging each parent's first two children into a new internal node and
chaining any further children onto it, recording distance 1 - similarity.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import CyclicTree, NonMonotoneSimilarity, OrphanNode, ValidationError
from .linkage import Linkage, validate_linkage


class TreeEdge(NamedTuple):
    parent: int
    child: int
    similarity: float


@dataclass(frozen=True)
class ConsensusTree:
    """Raw upstream output: merge edges over community ids, plus the
    finest-partition membership of each network node."""

    edges: tuple
    finest: np.ndarray  # community id per network node

    def __post_init__(self):
        self.finest.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return int(self.finest.size)

    @classmethod
    def from_rows(cls, rows, finest) -> "ConsensusTree":
        edges = tuple(TreeEdge(int(p), int(c), float(s)) for p, c, s in rows)
        for e in edges:
            if not 0.0 < e.similarity <= 1.0:
                raise ValidationError(f"similarity {e.similarity!r} outside (0, 1]")
        return cls(edges, np.asarray(finest, dtype=np.int64))


def _parent_edges(edges):
    parent_of = {}
    for e in edges:
        if e.child in parent_of:
            raise CyclicTree(f"id {e.child} has two parents")
        parent_of[e.child] = e
    return parent_of


def _check_monotone_similarity(edges, parent_of):
    for e in edges:
        up = parent_of.get(e.parent)
        if up is not None and up.similarity > e.similarity:
            raise NonMonotoneSimilarity(e.parent, e.child)


def _reachable_from(root, edges):
    kids = {}
    for e in edges:
        kids.setdefault(e.parent, []).append(e.child)
    seen = {root}
    stack = [root]
    while stack:
        for c in kids.get(stack.pop(), ()):
            if c not in seen:
                seen.add(c)
                stack.append(c)
    return seen


def complete_tree(tree: ConsensusTree):
    """Stage one: the completed edge list.

    Community ids are renumbered to N, N+1, ... (ascending original id),
    and each finest community gains one edge per member node at
    similarity 1. Returns ``(edges, n_nodes)`` where edge children below
    N are network nodes. Validates that the result is a single tree with
    similarities non-increasing toward the root.
    """
    n = tree.n_nodes
    if n == 0:
        raise ValidationError("empty membership vector")
    community_ids = sorted({e.parent for e in tree.edges}
                           | {e.child for e in tree.edges}
                           | set(np.unique(tree.finest).tolist()))
    renum = {cid: n + i for i, cid in enumerate(community_ids)}

    edges = [TreeEdge(renum[e.parent], renum[e.child], e.similarity) for e in tree.edges]
    for node, cid in enumerate(tree.finest.tolist()):
        edges.append(TreeEdge(renum[cid], int(node), 1.0))

    parent_of = _parent_edges(edges)
    roots = [i for i in range(n, n + len(community_ids)) if i not in parent_of]
    if not roots:
        raise CyclicTree("no root community")
    best = max(roots, key=lambda r: len(_reachable_from(r, edges)))
    reachable = _reachable_from(best, edges)
    for node in range(n):
        if node not in reachable:
            raise OrphanNode(node, int(tree.finest[node]))
    if len(roots) > 1 or len(reachable) != len(edges) + 1:
        raise CyclicTree(f"{len(roots)} root communities, "
                         f"{len(edges) + 1 - len(reachable)} unreachable ids")
    _check_monotone_similarity(edges, parent_of)
    return edges, n


def tree_to_linkage(ntree_edges, n_nodes: int) -> Linkage:
    """Stage two: binary merge list from a completed edge list.

    Edges are processed by decreasing similarity; within a tier, deeper
    parents first (so a community is fully assembled before it merges
    upward at an equal similarity), then ascending parent and child ids.
    A parent's first child is held; each further child emits one merge
    row against the parent's accumulated node at distance 1 - similarity.
    Single-child communities pass their child through unchanged.
    """
    n = int(n_nodes)
    parent_of = _parent_edges(ntree_edges)
    _check_monotone_similarity(ntree_edges, parent_of)
    depth_cache = {}

    def depth(cid):
        d = depth_cache.get(cid)
        if d is None:
            d = 0 if cid not in parent_of else depth(parent_of[cid]) + 1
            depth_cache[cid] = d
        return d

    ordered = sorted(ntree_edges,
                     key=lambda e: (-e.similarity, -depth(e.parent), e.parent, e.child))
    resolve = {i: i for i in range(n)}  # completed subtree roots; network nodes to start
    pending = {}
    rows = []
    for e in ordered:
        child = resolve.pop(e.child, None)
        if child is None:
            child = pending.pop(e.child, None)  # single-child community passes through
        if child is None:
            raise CyclicTree(f"child {e.child} used before its own children merged")
        if e.parent in pending:
            left = pending.pop(e.parent)
        elif e.parent in resolve:
            left = resolve.pop(e.parent)
        else:
            pending[e.parent] = child
            continue
        a, b = (left, child) if left < child else (child, left)
        rows.append((a, b, 1.0 - e.similarity))
        resolve[e.parent] = n + len(rows) - 1
    return validate_linkage(rows, n)
