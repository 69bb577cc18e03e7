"""Partition comparison: mutual information, its chance expectation, AMI.

Everything is in nats. The expected mutual information under random
relabeling is computed analytically: each contingency cell follows a
hypergeometric law given the margins, and the expectation is a triple
sum over cells and feasible cell counts, evaluated in log-space with a
cached log-factorial table. AMI then normalizes by the larger of the two
partition entropies.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import EmptyCommunity, LengthMismatch
from .linkage import as_membership


@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray  # n_ij
    row_sums: np.ndarray  # a_i
    col_sums: np.ndarray  # b_j
    total: int

    @classmethod
    def from_partitions(cls, u, v) -> "ContingencyTable":
        u = as_membership(u)
        v = as_membership(v)
        if u.size != v.size:
            raise LengthMismatch(u.size, v.size)
        ku = int(u.max()) + 1
        kv = int(v.max()) + 1
        counts = np.bincount(u * kv + v, minlength=ku * kv).reshape(ku, kv)
        return cls(counts, counts.sum(axis=1), counts.sum(axis=0), int(u.size))


def entropy_of_margins(margins) -> float:
    """Shannon entropy (nats) of the community-size distribution."""
    a = np.asarray(margins, dtype=np.float64)
    a = a[a > 0]
    n = a.sum()
    p = a / n
    return float(-(p @ np.log(p)))


def mutual_information(u, v) -> float:
    """MI between two equal-length partitions, in nats."""
    table = ContingencyTable.from_partitions(u, v)
    return mutual_information_of_table(table)


def mutual_information_of_table(table: ContingencyTable) -> float:
    n = table.total
    i, j = np.nonzero(table.counts)
    nij = table.counts[i, j].astype(np.float64)
    outer = table.row_sums[i] * table.col_sums[j]
    return float(max(0.0, (nij / n) @ (np.log(n * nij) - np.log(outer))))


def expected_mi(row_sums, col_sums) -> float:
    """Analytic E[MI] over random contingency tables with fixed margins.

    Cells with equal margin pairs share their contribution, so the sum
    runs over unique (a, b) value pairs weighted by multiplicity; the
    hypergeometric pmf is evaluated in log-space.
    """
    a = np.asarray(row_sums, dtype=np.int64)
    b = np.asarray(col_sums, dtype=np.int64)
    a = a[a > 0]
    b = b[b > 0]
    n = int(a.sum())
    if n != int(b.sum()):
        raise LengthMismatch(n, int(b.sum()))
    ua, ca = np.unique(a, return_counts=True)
    ub, cb = np.unique(b, return_counts=True)

    # per-cell n ranges: n from max(1, a+b-N) to min(a, b); the n = 0 term is zero
    av, bv = np.meshgrid(ua, ub, indexing="ij")
    av, bv = av.ravel(), bv.ravel()
    mult = np.outer(ca, cb).ravel().astype(np.float64)
    start = np.maximum(1, av + bv - n)
    stop = np.minimum(av, bv)
    lengths = np.maximum(stop - start + 1, 0)
    keep = lengths > 0
    av, bv, mult, start, lengths = av[keep], bv[keep], mult[keep], start[keep], lengths[keep]
    if av.size == 0:
        return 0.0

    cell = np.repeat(np.arange(av.size), lengths)
    offs = np.arange(lengths.sum()) - np.repeat(np.cumsum(lengths) - lengths, lengths)
    nn = start[cell] + offs
    aa = av[cell]
    bb = bv[cell]

    lf = gammaln(np.arange(n + 2, dtype=np.float64))  # lf[x] = ln((x-1)!)

    def lfac(x):
        return lf[x + 1]

    log_pmf = (lfac(aa) + lfac(bb) + lfac(n - aa) + lfac(n - bb)
               - lfac(n) - lfac(nn) - lfac(aa - nn) - lfac(bb - nn)
               - lfac(n - aa - bb + nn))
    terms = (nn / n) * (np.log(n * nn.astype(np.float64)) - np.log(aa.astype(np.float64) * bb)) \
        * np.exp(log_pmf)
    per_cell = np.bincount(cell, weights=terms, minlength=av.size)
    return float(per_cell @ mult)


def ami(u, v) -> float:
    """Adjusted mutual information: (MI - E[MI]) / (max entropy - E[MI]).

    Exactly 1 for identical partitions. When both partitions are the
    trivial single community the agreement is perfect (1); any other
    zero denominator yields 0, matching common library convention.
    """
    u = as_membership(u)
    v = as_membership(v)
    if u.size != v.size:
        raise LengthMismatch(u.size, v.size)
    if np.array_equal(u, v):
        return 1.0
    table = ContingencyTable.from_partitions(u, v)
    h_u = entropy_of_margins(table.row_sums)
    h_v = entropy_of_margins(table.col_sums)
    emi = expected_mi(table.row_sums, table.col_sums)
    denom = max(h_u, h_v) - emi
    if denom == 0.0:
        return 0.0
    return (mutual_information_of_table(table) - emi) / denom


def jaccard_index(a, b) -> float:
    a = set(a)
    b = set(b)
    union = len(a | b)
    return len(a & b) / union if union else 0.0


def jaccard_assign(community, regions: dict) -> str:
    """Name of the region maximizing Jaccard overlap with ``community``.

    ``regions`` maps names to node sets; ties (including the all-zero
    overlap case) resolve to the earliest declared region.
    """
    community = set(community)
    if not community:
        raise EmptyCommunity()
    if not regions:
        raise ValueError("need at least one region")
    best_name, best_j = None, -1.0
    for name, nodes in regions.items():
        j = jaccard_index(community, nodes)
        if j > best_j:
            best_name, best_j = name, j
    return best_name
