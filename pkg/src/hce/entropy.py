"""Hierarchical clustering entropy: profiles, level selection, renormalization.

The score of a partition of N nodes into K communities with sizes n_c is

    ((N - K) / (N - 1)) * sum_c p_c * ln(1 / p_c),    p_c = (n_c - 1) / (N - K)

in nats. Singlet communities have p_c = 0 and contribute nothing, so the
all-singletons and single-community partitions both score exactly zero.
Selecting the maximizing K, collapsing its communities into supernodes
and repeating on the trimmed dendrogram yields the renormalization
sequence R_0, R_1, ...
"""

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NTooSmall, SizesDoNotSumToN
from .linkage import Linkage, Partition, community_sizes, cut_at_k, trim_to_supernodes


def effective_fractions(sizes, n_nodes: int) -> np.ndarray:
    """Effective community fractions p_c = (n_c - 1) / (N - K).

    Aligned with the order of ``sizes``. Singlets map to 0. For K = N
    (all singletons) the vector is all zeros by convention.
    """
    sizes = np.asarray(sizes, dtype=np.int64)
    n = int(n_nodes)
    total = int(sizes.sum())
    if total != n:
        raise SizesDoNotSumToN(total, n)
    k = sizes.size
    if k == n:
        return np.zeros(k)
    return (sizes - 1) / (n - k)


def hce_value(sizes, n_nodes: int) -> float:
    """Score of one partition, given its community sizes, in nats."""
    n = int(n_nodes)
    if n < 2:
        raise NTooSmall(n)
    sizes = np.asarray(sizes, dtype=np.int64)
    total = int(sizes.sum())
    if total != n:
        raise SizesDoNotSumToN(total, n)
    k = sizes.size
    nontrivial = sizes[sizes > 1]
    # zero or one non-singlet community: entropy of (at most) a point mass
    if nontrivial.size <= 1:
        return 0.0
    p = (nontrivial - 1) / (n - k)
    return float((n - k) / (n - 1) * -(p @ np.log(p)))


@dataclass(frozen=True)
class HceProfile:
    """Score per community count K for one renormalization level.

    ``k`` runs N, N-1, ..., 1 and ``hce`` is aligned with it. Community
    sizes per K are not materialized (they would be quadratic in N); use
    :meth:`sizes_at` to recover them from the source dendrogram.
    """

    n_nodes: int
    k: np.ndarray
    hce: np.ndarray
    _linkage: Optional[Linkage] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.k.setflags(write=False)
        self.hce.setflags(write=False)

    def value_at(self, k: int) -> float:
        return float(self.hce[self.n_nodes - int(k)])

    def sizes_at(self, k: int) -> np.ndarray:
        if self._linkage is None:
            raise ValueError("profile was not built from a dendrogram")
        return community_sizes(cut_at_k(self._linkage, int(k)))


def hce_profile(linkage: Linkage) -> HceProfile:
    """Score every level K = N..1 of a dendrogram.

    Incremental over the merge sequence, O(N) total: tracks
    S = sum over non-singlet communities of (n_c - 1) ln(n_c - 1), from
    which the entropy at each K follows in constant time.
    """
    n = linkage.n_leaves
    if n < 2:
        raise NTooSmall(n)
    ks = np.arange(n, 0, -1, dtype=np.int64)
    values = np.zeros(n)

    node_size = np.ones(2 * n - 1, dtype=np.int64)
    s_acc = 0.0
    n_nontrivial = 0
    inv_nm1 = 1.0 / (n - 1)
    lefts, rights = linkage.lefts, linkage.rights
    for m in range(n - 1):
        sl = node_size[lefts[m]]
        sr = node_size[rights[m]]
        sz = sl + sr
        node_size[n + m] = sz
        if sl > 1:
            s_acc -= (sl - 1) * math.log(sl - 1)
            n_nontrivial -= 1
        if sr > 1:
            s_acc -= (sr - 1) * math.log(sr - 1)
            n_nontrivial -= 1
        s_acc += (sz - 1) * math.log(sz - 1)
        n_nontrivial += 1
        if n_nontrivial >= 2:
            nk = m + 1  # = N - K
            entropy = math.log(nk) - s_acc / nk
            values[m + 1] = nk * inv_nm1 * entropy
        # with 0 or 1 non-singlet communities the score is exactly 0
    return HceProfile(n, ks, values, linkage)


def select_level(profile: HceProfile):
    """Most informative K: argmax of the profile, ties toward the largest K.

    Returns ``(k_star, hce_max)``, or ``None`` when the maximum is zero
    (no informative level exists).
    """
    i = int(np.argmax(profile.hce))  # k is stored descending: first max = largest K
    if profile.hce[i] <= 0.0:
        return None
    return int(profile.k[i]), float(profile.hce[i])


class StoppingReason(enum.Enum):
    NO_INFORMATIVE_LEVEL = "no_informative_level"
    MIN_SIZE = "reached_minimum_size"
    MAX_LEVELS = "reached_max_levels"


@dataclass(frozen=True)
class HierarchyLevel:
    label: str
    n_nodes: int
    k: int
    hce: float
    membership: Partition  # over the ORIGINAL nodes
    profile: HceProfile


@dataclass(frozen=True)
class HierarchyResult:
    levels: tuple
    stopping_reason: StoppingReason

    def __len__(self) -> int:
        return len(self.levels)


def extract_hierarchy(linkage: Linkage, max_levels: Optional[int] = None) -> HierarchyResult:
    """Recursively select and renormalize: R_0 (finest), R_1, ...

    Each round scores the current dendrogram, records the maximizing
    partition mapped back to the original nodes, collapses its
    communities into supernodes and trims. Stops when no level is
    informative, the renormalized system has <= 2 supernodes, or
    ``max_levels`` is reached.
    """
    levels = []
    current = linkage
    leaf_map = np.arange(linkage.n_leaves)
    while True:
        if max_levels is not None and len(levels) >= max_levels:
            reason = StoppingReason.MAX_LEVELS
            break
        profile = hce_profile(current)
        selected = select_level(profile)
        if selected is None:
            reason = StoppingReason.NO_INFORMATIVE_LEVEL
            break
        k_star, value = selected
        part = cut_at_k(current, k_star)
        original = Partition.from_labels(part.membership[leaf_map])
        levels.append(HierarchyLevel(
            label=f"R_{len(levels)}",
            n_nodes=current.n_leaves,
            k=k_star,
            hce=value,
            membership=original,
            profile=profile,
        ))
        if k_star <= 2:
            reason = StoppingReason.MIN_SIZE
            break
        current, part = trim_to_supernodes(current, k_star)
        leaf_map = part.membership[leaf_map]
    return HierarchyResult(tuple(levels), reason)
