"""Benchmark network generators with planted multilevel ground truth.

Two families:

* The nested random graph (HNRG): every community at level l splits into
  ``r`` equal subcommunities at level l-1; a pair's edge probability
  depends only on the finest level at which the two nodes share a
  community. The cohesiveness ``rho`` fixes the ratio of coarser-level to
  same-level expected connections, which pins the per-level connection
  probabilities in closed form given the mean degree.

* The asymmetric hierarchical benchmark (HB): communities split
  recursively into a random number of unequally sized children, a
  power-law degree sequence is drawn, and a fixed fraction of the edge
  budget is placed at each hierarchy level with endpoints chosen
  proportionally to residual degree.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    InfeasibleBudget,
    LevelOutOfRange,
    ProbabilitiesDontSumToOne,
    ProbabilityExceedsOne,
    ValidationError,
)
from .linkage import Partition
from .seeds import derive_rng


@dataclass(frozen=True)
class PlantedNetwork:
    """Simple undirected graph plus one planted partition per level, finest first."""

    n_nodes: int
    edges: np.ndarray  # (m, 2) with u < v, lexicographically sorted
    ground_truth: tuple

    def __post_init__(self):
        self.edges.setflags(write=False)

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    def mean_degree(self) -> float:
        return 2.0 * self.n_edges / self.n_nodes

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n_nodes)


# ---------------------------------------------------------------------------
# HNRG

@dataclass(frozen=True)
class HnrgConfig:
    s0: int            # finest community size
    r: int             # subcommunities merging into one community
    l: int             # number of non-trivial levels
    mean_degree: float
    rho: float = 1.0   # cohesiveness: coarser-levels-to-this-level degree ratio
    seed: int = 0

    def __post_init__(self):
        if self.s0 < 2 or self.r < 2 or self.l < 1:
            raise ValidationError("require s0 >= 2, r >= 2, l >= 1")
        if not self.mean_degree > 0 or not self.rho > 0:
            raise ValidationError("require mean_degree > 0 and rho > 0")

    @property
    def n_nodes(self) -> int:
        return self.r * self.s0 * self.r ** (self.l - 1)


def hnrg_probabilities(cfg: HnrgConfig, clamp: bool = False):
    """Community sizes S_0..S_L and connection probabilities p_0..p_L.

    S_L is the count of nodes outside a node's coarsest community (the
    background pool), not a community size. Raises
    :class:`ProbabilityExceedsOne` when the mean degree is too large for
    the finest levels to stay below probability one, unless ``clamp``
    caps probabilities at 1 (the realized mean degree then falls short of
    the nominal one).
    """
    sizes = np.array([cfg.s0 * cfg.r ** level for level in range(cfg.l)], dtype=np.int64)
    n = cfg.r * sizes[-1]
    sizes = np.append(sizes, n - sizes[-1])

    rho = cfg.rho
    coef = np.empty(cfg.l + 1)
    for level in range(cfg.l):
        coef[level] = rho ** level / (1 + rho) ** (level + 1) / (sizes[level] - 1)
    coef[cfg.l] = rho ** cfg.l / (1 + rho) ** cfg.l / sizes[cfg.l]
    probs = coef * cfg.mean_degree

    if np.any(probs > 1.0):
        if clamp:
            probs = np.minimum(probs, 1.0)
        else:
            level = int(np.argmax(probs > 1.0))
            raise ProbabilityExceedsOne(level, float(probs[level]), float(1.0 / coef.max()))
    return sizes, probs


def hnrg_level_degrees(cfg: HnrgConfig, clamp: bool = False) -> np.ndarray:
    """Expected connections per level, k_l; these sum to the mean degree."""
    sizes, probs = hnrg_probabilities(cfg, clamp=clamp)
    pots = (sizes - 1).astype(np.float64)
    pots[-1] = sizes[-1]
    return probs * pots


def hnrg_critical_degree(cfg: HnrgConfig, level: int) -> float:
    """Mean degree at which nodes expect one connection inside their
    level-``level`` community, the onset of that level's detectability."""
    if not 1 <= level < cfg.l:
        raise LevelOutOfRange(level, cfg.l)
    sizes = hnrg_sizes(cfg)
    rho = cfg.rho
    c_here = rho ** level / (1 + rho) ** (level + 1) / (sizes[level] - 1)
    c_below = rho ** (level - 1) / (1 + rho) ** level / (sizes[level - 1] - 1)
    slope = c_here * (sizes[level] - sizes[level - 1]) + c_below * sizes[level - 1]
    return float(1.0 / slope)


def hnrg_sizes(cfg: HnrgConfig) -> np.ndarray:
    sizes = np.array([cfg.s0 * cfg.r ** level for level in range(cfg.l)], dtype=np.int64)
    return np.append(sizes, cfg.n_nodes - sizes[-1])


def hnrg_sample(cfg: HnrgConfig, clamp: bool = False) -> PlantedNetwork:
    """One network instance: independent Bernoulli edges per pair, with
    the probability of the finest level at which the pair shares a
    community. Ground truth carries levels 0..L-1, finest first.

    Pairs are streamed row by row, so memory stays O(N) and the edge list
    is identical for a given seed regardless of network size.
    """
    sizes, probs = hnrg_probabilities(cfg, clamp=clamp)
    n = cfg.n_nodes
    blocks = [np.arange(n, dtype=np.int64) // sizes[level] for level in range(cfg.l)]

    rng = derive_rng(cfg.seed, "hnrg-edges")
    src, dst = [], []
    level_row = np.empty(n, dtype=np.int64)
    for u in range(n - 1):
        m = n - u - 1
        lr = level_row[:m]
        lr[:] = cfg.l
        for level in range(cfg.l - 1, -1, -1):
            np.copyto(lr, level, where=blocks[level][u + 1:] == blocks[level][u])
        hit = np.nonzero(rng.random(m) < probs[lr])[0]
        if hit.size:
            src.append(np.full(hit.size, u, dtype=np.int64))
            dst.append(hit + u + 1)
    if src:
        edges = np.column_stack([np.concatenate(src), np.concatenate(dst)])
    else:
        edges = np.empty((0, 2), dtype=np.int64)
    truth = tuple(Partition.from_labels(blocks[level]) for level in range(cfg.l))
    return PlantedNetwork(n, edges, truth)


# ---------------------------------------------------------------------------
# HB

@dataclass(frozen=True)
class HbConfig:
    n_nodes: int
    levels: int
    edge_fractions: tuple  # p_0 (finest) .. p_L (background), sums to 1
    degree_exponent: float = 2.0
    min_degree: int = 5
    max_degree: int = 70
    split_mean: float = 4.0
    min_splits: int = 2
    dirichlet_concentration: float = 1.5
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "edge_fractions", tuple(float(p) for p in self.edge_fractions))
        p = np.asarray(self.edge_fractions)
        if len(p) != self.levels + 1:
            raise ValidationError(
                f"need {self.levels + 1} edge fractions for {self.levels} levels, got {len(p)}")
        if np.any(p < 0):
            raise ValidationError("edge fractions must be non-negative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ProbabilitiesDontSumToOne(float(p.sum()))
        if self.levels < 1 or self.n_nodes < self.min_splits:
            raise ValidationError("require levels >= 1 and enough nodes to split")
        if not 1 <= self.min_degree <= self.max_degree:
            raise ValidationError("require 1 <= min_degree <= max_degree")


def largest_remainder(weights, total: int) -> np.ndarray:
    """Round ``total * weights / sum(weights)`` to integers summing to total."""
    weights = np.asarray(weights, dtype=np.float64)
    raw = weights / weights.sum() * total
    out = np.floor(raw).astype(np.int64)
    short = total - int(out.sum())
    order = np.argsort(-(raw - out), kind="stable")
    out[order[:short]] += 1
    return out


def _split_sizes(rng, parent_size: int, cfg: HbConfig) -> np.ndarray:
    """Child sizes: truncated-Poisson child count, Dirichlet proportions,
    largest-remainder rounding; resampled until every child is non-empty."""
    n_children = 0
    while n_children < cfg.min_splits:
        n_children = int(rng.poisson(cfg.split_mean))
    n_children = min(n_children, parent_size)
    for _ in range(1000):
        w = rng.dirichlet(np.full(n_children, cfg.dirichlet_concentration))
        sizes = largest_remainder(w, parent_size)
        if sizes.min() >= 1:
            return sizes
    # deterministic patch-up: move mass from the largest children
    sizes = np.maximum(sizes, 1)
    while sizes.sum() > parent_size:
        sizes[np.argmax(sizes)] -= 1
    return sizes


def _power_law_degrees(rng, cfg: HbConfig) -> np.ndarray:
    ks = np.arange(cfg.min_degree, cfg.max_degree + 1, dtype=np.float64)
    pmf = ks ** -cfg.degree_exponent
    cdf = np.cumsum(pmf / pmf.sum())
    deg = cfg.min_degree + np.searchsorted(cdf, rng.random(cfg.n_nodes), side="right")
    deg = np.minimum(deg, cfg.max_degree).astype(np.int64)
    if deg.sum() % 2 == 1:
        fixable = np.nonzero(deg < cfg.max_degree)[0]
        deg[rng.choice(fixable)] += 1
    return deg


def _pairs_within(membership: np.ndarray) -> int:
    counts = np.bincount(membership)
    return int((counts * (counts - 1) // 2).sum())


class _LevelSampler:
    """Residual-degree-proportional sampling of eligible pairs at one level.

    Eligible pairs for level i share a level-i community but no finer
    one; the background level pairs nodes across coarsest communities.
    """

    def __init__(self, level, memb_fine, memb_coarse, n):
        self.level = level
        self.fine = memb_fine      # None at the finest community level
        self.coarse = memb_coarse  # None for the background level
        self.n = n
        if memb_coarse is not None:
            self.groups = [np.nonzero(memb_coarse == c)[0]
                           for c in range(int(memb_coarse.max()) + 1)]

    def eligible_pairs(self) -> int:
        whole = self.n * (self.n - 1) // 2 if self.coarse is None else _pairs_within(self.coarse)
        finer = 0 if self.fine is None else _pairs_within(self.fine)
        return whole - finer

    def _weighted_pick(self, rng, nodes, weights):
        total = weights.sum()
        if total <= 0:
            return int(nodes[rng.integers(nodes.size)])
        return int(nodes[rng.choice(nodes.size, p=weights / total)])

    def draw(self, rng, residual):
        if self.coarse is None:
            all_nodes = np.arange(self.n)
            u = self._weighted_pick(rng, all_nodes, residual.astype(np.float64))
            mask = self.fine != self.fine[u]
        else:
            masses = np.array([residual[g].sum() for g in self.groups], dtype=np.float64)
            sq = np.array([(residual[g].astype(np.float64) ** 2).sum() for g in self.groups])
            w = np.maximum(masses ** 2 - sq, 0.0)
            if w.sum() <= 0:
                w = np.array([float(g.size > 1) for g in self.groups])
                if w.sum() <= 0:
                    return None
            gi = int(rng.choice(len(self.groups), p=w / w.sum()))
            group = self.groups[gi]
            u = self._weighted_pick(rng, group, residual[group].astype(np.float64))
            if self.fine is None:
                mask = np.zeros(self.n, dtype=bool)
                mask[group] = True
                mask[u] = False
            else:
                mask = np.zeros(self.n, dtype=bool)
                mask[group] = True
                mask &= self.fine != self.fine[u]
        cand = np.nonzero(mask)[0]
        if cand.size == 0:
            return None
        v = self._weighted_pick(rng, cand, residual[cand].astype(np.float64))
        return (u, v) if u < v else (v, u)

    def all_unused_pairs(self, used):
        out = []
        if self.coarse is None:
            iu, ju = np.triu_indices(self.n, 1)
            pairs = zip(iu.tolist(), ju.tolist())
            for u, v in pairs:
                if self.fine[u] != self.fine[v] and (u, v) not in used:
                    out.append((u, v))
            return out
        for g in self.groups:
            for a in range(g.size - 1):
                for b in range(a + 1, g.size):
                    u, v = int(g[a]), int(g[b])
                    if self.fine is not None and self.fine[u] == self.fine[v]:
                        continue
                    if (u, v) not in used:
                        out.append((u, v))
        return out


def hb_sample(cfg: HbConfig) -> PlantedNetwork:
    """One asymmetric-hierarchy instance.

    Each level's edge budget is the largest-remainder rounding of
    p_i * m. Endpoints are drawn proportionally to residual degree among
    that level's eligible pairs, falling back to exact enumeration of the
    remaining unused pairs when rejection stalls, so realized per-level
    fractions track the targets up to rounding plus the minimum-degree
    repair pass. Realized degrees always stay within
    [min_degree, max_degree].
    """
    n = cfg.n_nodes
    rng = derive_rng(cfg.seed, "hb-structure")

    # recursive splits, coarse to fine; communities hold contiguous node ranges
    membs_coarse_first = []
    comms = [np.arange(n, dtype=np.int64)]
    for _ in range(cfg.levels):
        new_comms = []
        memb = np.empty(n, dtype=np.int64)
        for c in comms:
            if c.size < 2:
                new_comms.append(c)
                continue
            sizes = _split_sizes(rng, c.size, cfg)
            offs = np.concatenate([[0], np.cumsum(sizes)])
            for ci in range(sizes.size):
                new_comms.append(c[offs[ci]:offs[ci + 1]])
        for label, c in enumerate(new_comms):
            memb[c] = label
        membs_coarse_first.append(memb)
        comms = new_comms
    membs = membs_coarse_first[::-1]  # finest first

    deg_rng = derive_rng(cfg.seed, "hb-degrees")
    planted = _power_law_degrees(deg_rng, cfg)
    m = int(planted.sum()) // 2
    budgets = largest_remainder(np.asarray(cfg.edge_fractions), m)

    samplers = []
    for i in range(cfg.levels + 1):
        fine = membs[i - 1] if i >= 1 else None
        coarse = membs[i] if i < cfg.levels else None
        samplers.append(_LevelSampler(i, fine, coarse, n))
    for i, sampler in enumerate(samplers):
        avail = sampler.eligible_pairs()
        if budgets[i] > avail:
            raise InfeasibleBudget(i, int(budgets[i]), avail)

    edge_rng = derive_rng(cfg.seed, "hb-edges")
    used = set()
    realized = np.zeros(n, dtype=np.int64)
    residual = planted.copy()

    def place(u, v):
        used.add((u, v))
        realized[u] += 1
        realized[v] += 1
        residual[u] = max(residual[u] - 1, 0)
        residual[v] = max(residual[v] - 1, 0)

    for i, sampler in enumerate(samplers):
        placed = 0
        stalls = 0
        while placed < budgets[i]:
            pair = sampler.draw(edge_rng, residual)
            if pair is None or pair in used:
                stalls += 1
                if stalls > 50:
                    remaining = sampler.all_unused_pairs(used)
                    if len(remaining) < budgets[i] - placed:
                        raise InfeasibleBudget(i, int(budgets[i]), placed + len(remaining))
                    remaining.sort()
                    w = np.array([residual[u] * residual[v] for u, v in remaining],
                                 dtype=np.float64)
                    if w.sum() <= 0:
                        w = np.ones(len(remaining))
                    take = edge_rng.choice(len(remaining), size=budgets[i] - placed,
                                           replace=False, p=w / w.sum())
                    for t in sorted(take.tolist()):
                        place(*remaining[t])
                    placed = budgets[i]
                continue
            stalls = 0
            place(*pair)
            placed += 1

    # minimum-degree repair: connect short nodes at the finest level that
    # still has unused capacity, preferring partners with residual stubs
    repair_rng = derive_rng(cfg.seed, "hb-repair")
    for v in np.nonzero(realized < cfg.min_degree)[0]:
        while realized[v] < cfg.min_degree:
            placed_one = False
            for sampler in samplers:
                if sampler.coarse is None:
                    mask = np.ones(n, dtype=bool)
                else:
                    mask = sampler.coarse == sampler.coarse[v]
                if sampler.fine is not None:
                    mask &= sampler.fine != sampler.fine[v]
                mask[v] = False
                mask &= realized < cfg.max_degree
                cand = np.nonzero(mask)[0]
                cand = np.array([w for w in cand
                                 if (min(v, w), max(v, w)) not in used], dtype=np.int64)
                if cand.size == 0:
                    continue
                w_arr = residual[cand].astype(np.float64)
                if w_arr.sum() <= 0:
                    w_arr = np.ones(cand.size)
                w = int(cand[repair_rng.choice(cand.size, p=w_arr / w_arr.sum())])
                place(min(v, w), max(v, w))
                placed_one = True
                break
            if not placed_one:
                raise InfeasibleBudget(-1, int(cfg.min_degree), int(realized[v]))

    edges = np.array(sorted(used), dtype=np.int64).reshape(-1, 2)
    truth = tuple(Partition.from_labels(membs[i]) for i in range(cfg.levels))
    return PlantedNetwork(n, edges, truth)


def finest_shared_level(network: PlantedNetwork, u, v) -> np.ndarray:
    """Level index (finest-first) at which node pairs first share a
    community; pairs sharing none map to the background index L."""
    u = np.asarray(u)
    v = np.asarray(v)
    depth = len(network.ground_truth)
    out = np.full(u.shape, depth, dtype=np.int64)
    for level in range(depth - 1, -1, -1):
        memb = network.ground_truth[level].membership
        np.copyto(out, level, where=memb[u] == memb[v])
    return out
