"""Pairwise distance construction: graph cosine, correlation, Euclidean.

All three produce a :class:`CondensedDistances`: the upper triangle of
the pairwise matrix stored flat in row-major pair order (i < j), the
layout consumed by UPGMA. Pair values are filled in ascending row blocks
so results are reproducible on a single platform.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .errors import ConstantRow, ValidationError, ZeroNormNode

_BLOCK_ROWS = 256


def condensed_size(n: int) -> int:
    return n * (n - 1) // 2


def condensed_index(n: int, i, j):
    """Flat position of pair (i, j), i < j, in an n-observation layout."""
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    return n * i - i * (i + 1) // 2 + (j - i - 1)


@dataclass(frozen=True)
class CondensedDistances:
    """Upper-triangular pairwise distances as a flat array of length n(n-1)/2."""

    n: int
    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 1 or self.values.size != condensed_size(self.n):
            raise ValidationError(
                f"condensed array for n={self.n} must have length {condensed_size(self.n)}")
        if self.values.size and (not np.all(np.isfinite(self.values)) or self.values.min() < 0):
            raise ValidationError("distances must be finite and non-negative")
        self.values.setflags(write=False)

    def get(self, i: int, j: int) -> float:
        if i == j:
            return 0.0
        if i > j:
            i, j = j, i
        return float(self.values[condensed_index(self.n, i, j)])

    def to_square(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        iu = np.triu_indices(self.n, 1)
        out[iu] = self.values
        out[(iu[1], iu[0])] = self.values
        return out

    @classmethod
    def from_square(cls, matrix, atol: float = 0.0) -> "CondensedDistances":
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValidationError("expected a square matrix")
        if not np.allclose(matrix, matrix.T, rtol=0.0, atol=atol, equal_nan=False):
            raise ValidationError("distance matrix is not symmetric")
        n = matrix.shape[0]
        return cls(n, matrix[np.triu_indices(n, 1)].copy())


@dataclass(frozen=True)
class WeightedGraph:
    """Symmetric non-negative weight matrix; diagonal entries are self-weights."""

    weights: np.ndarray

    def __post_init__(self):
        w = self.weights
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValidationError("weight matrix must be square")
        if not np.array_equal(w, w.T):
            raise ValidationError("weights must be symmetric")
        if w.size and w.min() < 0:
            raise ValidationError("weights must be non-negative")
        w.setflags(write=False)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def from_dense(cls, matrix) -> "WeightedGraph":
        return cls(np.array(matrix, dtype=np.float64))

    @classmethod
    def from_edges(cls, n: int, edges, weights=None, log1p: bool = False) -> "WeightedGraph":
        """Build from an undirected edge list; duplicate pairs accumulate.

        ``log1p`` applies w = log(1 + f) to the accumulated weights, the
        standard taming transform for heavy-tailed interaction counts.
        """
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges.min() < 0 or edges.max() >= n):
            raise ValidationError("edge endpoint out of range")
        if weights is None:
            weights = np.ones(edges.shape[0])
        weights = np.asarray(weights, dtype=np.float64)
        w = np.zeros((n, n))
        np.add.at(w, (edges[:, 0], edges[:, 1]), weights)
        off = edges[:, 0] != edges[:, 1]
        np.add.at(w, (edges[off, 1], edges[off, 0]), weights[off])
        if log1p:
            w = np.log1p(w)
        return cls(w)

    def norms(self) -> np.ndarray:
        """Euclidean norm of each connectivity vector (self-weight included)."""
        return np.sqrt(np.einsum("ij,ij->i", self.weights, self.weights))


def graph_dot(g: WeightedGraph, i: int, j: int) -> float:
    """Dot product of connectivity vectors adapted to the graph setting.

    Sums v_i(k) v_j(k) over k excluding both endpoints, then adds the
    mutual-edge product v_i(j) v_j(i) and the self-weight product
    v_i(i) v_j(j), so nodes with identical neighborhoods score as
    parallel even though their raw vectors differ at positions i and j.
    """
    w = g.weights
    n = g.n
    if not (0 <= i < n and 0 <= j < n):
        raise ValidationError(f"node id out of range: ({i}, {j})")
    base = float(w[i] @ w[j])
    return (base
            - w[i, i] * w[j, i] - w[i, j] * w[j, j]
            + w[i, j] * w[j, i] + w[i, i] * w[j, j])


def graph_cosine_distances(g: WeightedGraph) -> CondensedDistances:
    """Chord distance sqrt(2 (1 - cos)) from the graph-adapted cosine.

    The cosine is clamped to [-1, 1] before the square root so
    floating-point accumulation can never produce a negative radicand.
    Raises :class:`ZeroNormNode` for nodes with no incident weight.
    """
    w = g.weights
    n = g.n
    norms = g.norms()
    zero = np.nonzero(norms == 0.0)[0]
    if zero.size:
        raise ZeroNormNode(int(zero[0]))
    diag = np.diagonal(w).copy()
    out = np.empty(condensed_size(n))
    pos = 0
    for start in range(0, n, _BLOCK_ROWS):
        stop = min(start + _BLOCK_ROWS, n)
        dots = w[start:stop] @ w.T
        block = (dots
                 - diag[start:stop, None] * w[start:stop]
                 - w[start:stop] * diag[None, :]
                 + w[start:stop] * w[start:stop]
                 + np.outer(diag[start:stop], diag))
        cos = block / np.outer(norms[start:stop], norms)
        np.clip(cos, -1.0, 1.0, out=cos)
        d = np.sqrt(2.0 * (1.0 - cos))
        for i in range(start, stop):
            m = n - i - 1
            out[pos:pos + m] = d[i - start, i + 1:]
            pos += m
    return CondensedDistances(n, out)


def correlation_distances(series, dtype=np.float64) -> CondensedDistances:
    """sqrt(2 (1 - r)) from the pairwise Pearson correlation of rows.

    Equivalent to the chord distance between z-scored rows, hence a true
    metric. Rows must have nonzero variance; callers working with raw
    recordings should filter first (see :mod:`hce.signals`).
    """
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValidationError("need a 2-D matrix with at least 2 rows")
    n, t = x.shape
    mu = x.mean(axis=1, keepdims=True)
    sd = x.std(axis=1)  # population convention
    bad = np.nonzero(sd == 0.0)[0]
    if bad.size:
        raise ConstantRow(int(bad[0]))
    z = (x - mu) / sd[:, None]
    out = np.empty(condensed_size(n), dtype=dtype)
    pos = 0
    for start in range(0, n, _BLOCK_ROWS):
        stop = min(start + _BLOCK_ROWS, n)
        r = (z[start:stop] @ z.T) / t
        np.clip(r, -1.0, 1.0, out=r)
        d = np.sqrt(2.0 * (1.0 - r))
        for i in range(start, stop):
            m = n - i - 1
            out[pos:pos + m] = d[i - start, i + 1:]
            pos += m
    return CondensedDistances(n, out)


def euclidean_distances(points) -> CondensedDistances:
    """Pairwise Euclidean distances of a point cloud (rows = points)."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if not np.all(np.isfinite(pts)):
        raise ValidationError("coordinates must be finite")
    return CondensedDistances(pts.shape[0], pdist(pts))
