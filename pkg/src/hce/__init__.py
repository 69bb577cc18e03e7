"""Hierarchical clustering entropy toolkit.

Builds dendrograms from graphs, point clouds, and time series; selects
maximally informative partition levels by the entropy of community
sizes; and renormalizes recursively to extract a multiscale hierarchy.
Ships benchmark generators with planted ground truth, partition-
comparison metrics, a consensus-tree adapter, and a signal-preparation
pipeline with circular-shift null models.
"""

from .benchmarks import (
    HbConfig,
    HnrgConfig,
    PlantedNetwork,
    hb_sample,
    hnrg_critical_degree,
    hnrg_level_degrees,
    hnrg_probabilities,
    hnrg_sample,
)
from .consensus import ConsensusTree, TreeEdge, complete_tree, tree_to_linkage
from .distances import (
    CondensedDistances,
    WeightedGraph,
    correlation_distances,
    euclidean_distances,
    graph_cosine_distances,
    graph_dot,
)
from .entropy import (
    HceProfile,
    HierarchyLevel,
    HierarchyResult,
    StoppingReason,
    effective_fractions,
    extract_hierarchy,
    hce_profile,
    hce_value,
    select_level,
)
from .linkage import (
    Linkage,
    MergeRecord,
    Partition,
    community_sizes,
    cut_at_k,
    trim_to_supernodes,
    validate_linkage,
)
from .metrics import (
    ContingencyTable,
    ami,
    entropy_of_margins,
    expected_mi,
    jaccard_assign,
    jaccard_index,
    mutual_information,
)
from .signals import (
    SizeEnsemble,
    TimeSeriesMatrix,
    circular_shift_null,
    filter_communities_by_nct,
    filter_rois,
    log_bin_edges,
    nct_details,
    nct_estimate,
    skewness,
)
from .upgma import UpgmaStats, upgma_linkage, upgma_linkage_with_stats, upgma_naive_oracle

__version__ = "0.1.0"
