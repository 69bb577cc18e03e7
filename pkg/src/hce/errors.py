"""Exception types shared across the toolkit.

Hierarchy: ``HceError`` is the common base. ``ValidationError`` covers
malformed inputs (CLI exit code 2), ``FileFormatError`` covers unreadable
or corrupt files (exit code 3), and ``InfeasibleError`` covers
configurations that cannot be realized (exit code 4).
"""


class HceError(Exception):
    pass


class ValidationError(HceError, ValueError):
    pass


class FileFormatError(HceError, OSError):
    pass


class InfeasibleError(HceError):
    pass


# --- linkage_core ---

class NonMonotoneDistances(ValidationError):
    def __init__(self, row, message=None):
        self.row = row
        super().__init__(message or f"merge distances decrease at row {row}")


class ChildReused(ValidationError):
    def __init__(self, row, child, message=None):
        self.row = row
        self.child = child
        super().__init__(message or f"node {child} is a child of two merges (second at row {row})")


class IdOutOfRange(ValidationError):
    def __init__(self, row, node, message=None):
        self.row = row
        self.node = node
        super().__init__(message or f"row {row} references node {node}, out of range")


class WrongRowCount(ValidationError):
    def __init__(self, expected, got):
        self.expected = expected
        self.got = got
        super().__init__(f"expected {expected} merge rows, got {got}")


class KOutOfRange(ValidationError):
    def __init__(self, k, n, lo=1):
        self.k = k
        super().__init__(f"community count k={k} outside [{lo}, {n}]")


# --- hce_engine ---

class SizesDoNotSumToN(ValidationError):
    def __init__(self, total, n):
        super().__init__(f"community sizes sum to {total}, expected N={n}")


class NTooSmall(ValidationError):
    def __init__(self, n):
        super().__init__(f"need N >= 2 nodes, got {n}")


# --- distance_geometry ---

class ZeroNormNode(ValidationError):
    def __init__(self, node):
        self.node = node
        super().__init__(f"node {node} has no incident weight (zero norm)")


class ConstantRow(ValidationError):
    def __init__(self, row):
        self.row = row
        super().__init__(f"row {row} has zero variance")


# --- upgma ---

class NonFiniteDistance(ValidationError):
    def __init__(self, message="distance matrix contains non-finite values"):
        super().__init__(message)


class TooLargeForOracle(ValidationError):
    def __init__(self, n, limit):
        super().__init__(f"naive oracle limited to n <= {limit}, got {n}")


# --- benchgen ---

class ProbabilityExceedsOne(InfeasibleError):
    def __init__(self, level, p, max_mean_degree):
        self.level = level
        self.p = p
        self.max_mean_degree = max_mean_degree
        super().__init__(
            f"connection probability at level {level} is {p:.6g} > 1; "
            f"maximal feasible mean degree is {max_mean_degree:.6g}"
        )


class LevelOutOfRange(ValidationError):
    def __init__(self, level, depth):
        super().__init__(f"level {level} outside [1, {depth - 1}]")


class ProbabilitiesDontSumToOne(ValidationError):
    def __init__(self, total):
        super().__init__(f"edge fractions sum to {total!r}, expected 1")


class InfeasibleBudget(InfeasibleError):
    def __init__(self, level, budget, available):
        self.level = level
        super().__init__(
            f"level {level} needs {budget} edges but only {available} eligible pairs exist"
        )


# --- partition_metrics ---

class LengthMismatch(ValidationError):
    def __init__(self, a, b):
        super().__init__(f"partitions have different lengths: {a} vs {b}")


class EmptyCommunity(ValidationError):
    def __init__(self):
        super().__init__("community is empty")


# --- mcc_adapter ---

class OrphanNode(ValidationError):
    def __init__(self, node, community):
        self.node = node
        super().__init__(f"node {node} is assigned to community {community}, "
                         f"which is not connected to the tree root")


class CyclicTree(ValidationError):
    def __init__(self, message="consensus tree edges contain a cycle or multiple parents"):
        super().__init__(message)


class NonMonotoneSimilarity(ValidationError):
    def __init__(self, parent, child):
        super().__init__(f"similarity increases from edge into {parent} to edge into {child}; "
                         "similarities must be non-increasing toward the root")


# --- signal_prep ---

class ZeroVariance(ValidationError):
    def __init__(self, row=None):
        where = "" if row is None else f" (row {row})"
        super().__init__(f"trace has zero variance{where}")


class AllRowsDegenerate(ValidationError):
    def __init__(self):
        super().__init__("no rows with defined skewness remain after dropping constant traces")


class EmptyEnsemble(ValidationError):
    def __init__(self):
        super().__init__("null size ensemble is empty")
