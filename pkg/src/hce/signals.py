"""Time-series quality filtering, circular-shift nulls, and size thresholds.

Fluorescence-style traces are screened on two population-moment
statistics: skewness (transient-driven signals are strongly
right-skewed) and the maximum of the z-scored trace (artifact spikes
inflate it). Null ensembles rotate every trace by an independent random
offset, preserving each trace's marginal statistics and autocorrelation
while destroying cross-trace alignment. Community sizes measured on such
ensembles yield the null-community threshold: the rightmost local
minimum of a kernel density over log sizes, below which communities are
noise-scale.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import gaussian_kde

from .errors import AllRowsDegenerate, EmptyEnsemble, ValidationError, ZeroVariance
from .linkage import Partition
from .seeds import derive_rng

LOG_BIN_DECADES = (0.0, 4.5)
LOG_BIN_COUNT = 20
KDE_GRID_POINTS = 512


@dataclass(frozen=True)
class TimeSeriesMatrix:
    """Rows are traces, columns are time points; optionally annotated with
    per-row spatial coordinates and region labels."""

    data: np.ndarray
    coordinates: Optional[np.ndarray] = None
    regions: Optional[tuple] = None

    def __post_init__(self):
        if self.data.ndim != 2:
            raise ValidationError("time series data must be 2-D (rows = traces)")
        self.data.setflags(write=False)

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    @property
    def n_times(self) -> int:
        return self.data.shape[1]

    def subset(self, rows) -> "TimeSeriesMatrix":
        rows = np.asarray(rows)
        coords = None if self.coordinates is None else self.coordinates[rows].copy()
        regs = None if self.regions is None else tuple(self.regions[i] for i in rows)
        return TimeSeriesMatrix(self.data[rows].copy(), coords, regs)


def as_matrix(m) -> TimeSeriesMatrix:
    if isinstance(m, TimeSeriesMatrix):
        return m
    return TimeSeriesMatrix(np.array(m, dtype=np.float64))


def skewness(trace) -> float:
    """Population-moment skewness: mean of cubed z-scores."""
    x = np.asarray(trace, dtype=np.float64)
    if x.size < 3:
        raise ValidationError(f"need at least 3 time points, got {x.size}")
    sd = x.std()
    if sd == 0.0:
        raise ZeroVariance()
    z = (x - x.mean()) / sd
    return float((z ** 3).mean())


@dataclass(frozen=True)
class RowDiagnostics:
    skewness: np.ndarray
    max_z: np.ndarray
    constant: np.ndarray  # rows dropped before the statistics
    kept: np.ndarray


def filter_rois(m) -> tuple[np.ndarray, RowDiagnostics]:
    """Indices of rows passing both quality criteria, plus diagnostics.

    A row is kept when its skewness lies within one standard deviation of
    the ensemble mean and its maximum z-score does not exceed the
    ensemble mean plus one standard deviation. Both bounds are inclusive,
    so a degenerate ensemble of identical rows keeps everything.
    Zero-variance rows are dropped before the statistics are formed.
    """
    m = as_matrix(m)
    if m.n_times < 3:
        raise ValidationError("need at least 3 time points for skewness")
    x = m.data
    sd = x.std(axis=1)
    constant = sd == 0.0
    ok = ~constant
    if ok.sum() < 2:
        raise AllRowsDegenerate()

    z = (x[ok] - x[ok].mean(axis=1, keepdims=True)) / sd[ok, None]
    skew = np.full(m.n_rows, np.nan)
    maxz = np.full(m.n_rows, np.nan)
    skew[ok] = (z ** 3).mean(axis=1)
    maxz[ok] = z.max(axis=1)

    skew_mu, skew_sd = skew[ok].mean(), skew[ok].std()
    maxz_mu, maxz_sd = maxz[ok].mean(), maxz[ok].std()
    kept_mask = ok.copy()
    kept_mask[ok] = (np.abs(skew[ok] - skew_mu) <= skew_sd) \
        & (maxz[ok] <= maxz_mu + maxz_sd)
    kept = np.nonzero(kept_mask)[0]
    return kept, RowDiagnostics(skew, maxz, np.nonzero(constant)[0], kept)


def circular_shift_null(m, seed: int) -> TimeSeriesMatrix:
    """Rotate each row by an independent offset in {1, .., T-1}.

    Offsets derive from (seed, row), so a row's shift does not depend on
    how many rows accompany it. Every row keeps its exact value multiset
    (rotation is a permutation) and its circular autocovariance.
    """
    m = as_matrix(m)
    t = m.n_times
    if t < 2:
        raise ValidationError("need at least 2 time points to shift")
    out = np.empty_like(m.data)
    for i in range(m.n_rows):
        offset = int(derive_rng(seed, "circular-shift", i).integers(1, t))
        out[i] = np.roll(m.data[i], offset)
    return TimeSeriesMatrix(out, m.coordinates, m.regions)


@dataclass(frozen=True)
class SizeEnsemble:
    """Community sizes pooled over null-model instances."""

    sizes: np.ndarray
    n_instances: int

    def __post_init__(self):
        self.sizes.setflags(write=False)
        if self.sizes.size and self.sizes.min() < 1:
            raise ValidationError("community sizes must be >= 1")

    @classmethod
    def from_partitions(cls, partitions) -> "SizeEnsemble":
        pooled = [p.sizes() if isinstance(p, Partition) else np.asarray(p)
                  for p in partitions]
        return cls(np.concatenate(pooled).astype(np.int64), len(pooled))


def log_bin_edges() -> np.ndarray:
    """The fixed logarithmic size bins: 10^0 .. 10^4.5 in 20 steps."""
    return np.logspace(LOG_BIN_DECADES[0], LOG_BIN_DECADES[1], LOG_BIN_COUNT + 1)


@dataclass(frozen=True)
class NctResult:
    threshold: Optional[float]
    grid: np.ndarray          # log10 size positions
    density: np.ndarray       # Gaussian KDE of log10 sizes (Scott bandwidth)
    histogram: np.ndarray     # counts on the fixed logarithmic bins
    bin_edges: np.ndarray


def nct_details(ensemble) -> NctResult:
    """Density estimate and threshold search over a null size ensemble.

    The threshold is the rightmost strict local minimum of the KDE of
    log10 sizes on a 512-point grid spanning the bin range; ``None`` when
    the density has no interior minimum (unimodal nulls impose no size
    cutoff).
    """
    if not isinstance(ensemble, SizeEnsemble):
        ensemble = SizeEnsemble(np.asarray(ensemble, dtype=np.int64), 1)
    if ensemble.sizes.size == 0:
        raise EmptyEnsemble()
    edges = log_bin_edges()
    hist = np.histogram(ensemble.sizes, bins=edges)[0]
    logs = np.log10(ensemble.sizes.astype(np.float64))
    grid = np.linspace(LOG_BIN_DECADES[0], LOG_BIN_DECADES[1], KDE_GRID_POINTS)
    if np.ptp(logs) == 0.0 or logs.size < 2:
        # degenerate sample: flat in log space, no interior structure
        return NctResult(None, grid, np.zeros_like(grid), hist, edges)
    density = gaussian_kde(logs)(grid)  # Scott's rule bandwidth
    interior = np.nonzero((density[1:-1] < density[:-2]) & (density[1:-1] < density[2:]))[0]
    if interior.size == 0:
        return NctResult(None, grid, density, hist, edges)
    threshold = float(10.0 ** grid[interior[-1] + 1])
    return NctResult(threshold, grid, density, hist, edges)


def nct_estimate(ensemble) -> Optional[float]:
    """Null-community threshold in size units, or ``None``."""
    return nct_details(ensemble).threshold


def filter_communities_by_nct(partition, nct: Optional[float]) -> np.ndarray:
    """Community labels whose size strictly exceeds the threshold.

    ``None`` means no null cutoff was found: everything survives. Sizes
    exactly equal to the threshold are dropped.
    """
    if isinstance(partition, Partition):
        sizes = partition.sizes()
    else:
        sizes = np.bincount(np.asarray(partition, dtype=np.int64))
    labels = np.arange(sizes.size)
    if nct is None:
        return labels
    return labels[sizes > nct]
