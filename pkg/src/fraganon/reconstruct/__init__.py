"""Join non-reconstructability: checks, dependency graph and enforcement strategies."""

from .graph import (
    DependencyGraph,
    EnforcementError,
    EnforcementReport,
    build_dependency_graph,
    delta_enforce,
    delta_violations,
    dgbe_enforce,
    graph_from_fragments,
    naive_enforce,
)
from .joins import (
    VIOLATION_HEADER,
    Violation,
    check_all_subsets,
    check_multiway,
    check_non_reconstructability,
    eq_join_size,
    join_size_matrix,
)
from .versions import EtaUndefinedError, count_versions, eta, eta_counts, to_ec_level

__all__ = [
    "DependencyGraph",
    "EnforcementError",
    "EnforcementReport",
    "EtaUndefinedError",
    "VIOLATION_HEADER",
    "Violation",
    "build_dependency_graph",
    "check_all_subsets",
    "check_multiway",
    "check_non_reconstructability",
    "count_versions",
    "delta_enforce",
    "delta_violations",
    "dgbe_enforce",
    "eq_join_size",
    "eta",
    "eta_counts",
    "graph_from_fragments",
    "join_size_matrix",
    "naive_enforce",
    "to_ec_level",
]
