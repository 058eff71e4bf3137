"""Continuous-time vertex-splitting multigraph process toolkit.

Simulators for the splitting process and its root-component restriction,
exact samplers of the invariant cluster laws (continuous-time and
synchronous), and the statistical machinery used to verify their
quantitative behaviour at desk scale.
"""

from .multigraph import (
    CanonicalCode,
    GraphFormatError,
    RootedMultigraph,
    canonical_form,
    create_single,
    deserialize,
    has_isolated_vertex,
    is_connected,
    root_component,
    serialize,
    split_vertex,
)
from .genealogy import (
    BinaryTree,
    LabelSchedule,
    SpineState,
    canopy_distance,
    crossing_rate,
    extend_spine,
    forward_walk_leaf,
    leaf_weight,
    poisson_leaf_edges,
    sample_yule_tree,
    spine_leaf_distance,
    tree_distance,
)
from .processes import (
    FullProcessState,
    ProcessOptions,
    VertexCapExceeded,
    kill_time_all_old_edges,
    run_cluster_process,
    run_full_process,
    run_singleton_free,
    sample_cluster_via_genealogy,
    simulate_degree_chain,
)
from .invariant import (
    CapExceeded,
    DoubleEdgeResult,
    SampleDiagnostics,
    SamplerCaps,
    double_edge_stat,
    evolve,
    sample_stationary_cluster,
    sample_stationary_cluster_shifted,
    sample_synchronous_cluster,
)
from .rng import RandomStream, stream

__version__ = "0.1.0"

__all__ = [
    "BinaryTree",
    "CanonicalCode",
    "CapExceeded",
    "DoubleEdgeResult",
    "FullProcessState",
    "GraphFormatError",
    "LabelSchedule",
    "ProcessOptions",
    "RandomStream",
    "RootedMultigraph",
    "SampleDiagnostics",
    "SamplerCaps",
    "SpineState",
    "VertexCapExceeded",
    "canonical_form",
    "canopy_distance",
    "create_single",
    "crossing_rate",
    "deserialize",
    "double_edge_stat",
    "evolve",
    "extend_spine",
    "forward_walk_leaf",
    "has_isolated_vertex",
    "is_connected",
    "kill_time_all_old_edges",
    "leaf_weight",
    "poisson_leaf_edges",
    "root_component",
    "run_cluster_process",
    "run_full_process",
    "run_singleton_free",
    "sample_cluster_via_genealogy",
    "sample_stationary_cluster",
    "sample_stationary_cluster_shifted",
    "sample_synchronous_cluster",
    "sample_yule_tree",
    "serialize",
    "simulate_degree_chain",
    "spine_leaf_distance",
    "split_vertex",
    "stream",
    "tree_distance",
    "__version__",
]
