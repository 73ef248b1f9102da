"""Fair spectral clustering with Sherman-Morrison-Woodbury operators."""
from .algorithms import (
    ClusteringResult,
    fair_sc_normalized,
    fair_sc_unnormalized,
    fair_smw,
    ncut_value,
    run_pipeline,
    s_fair_sc,
    standard_sc,
)
from .cluster import clustering_error, kmeans
from .eigensolve import EigenRequest, EigenResult, eigen_gap_report, solve
from .fairness import (
    ConstraintMatrix,
    GroupPartition,
    average_balance,
    build_constraint_matrix,
    cluster_balance,
    constraint_residual,
)
from .graph import Graph, ensure_connected, from_edge_list
from .sbm import SbmSpec, generate

__version__ = "0.1.0"
