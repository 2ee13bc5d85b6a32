"""Core numerical library for geodesic-dcd.

This module contains the graph containers and file formats, the MCM
builders, the Grassmann geodesic fit, Euclidean clustering, metrics and the
detection pipeline.
"""

from .clustering import ClusterResult, fuzzy_cmeans, kmeans, kmedians, sign_split
from .geodesic import FitReport, GeodesicModel, fit_geodesic, init_geodesic, objective
from .graph import (
    EdgeSet,
    GraphSnapshot,
    PartitionSequence,
    SnapshotSequence,
    ensure_connected,
    remove_nodes,
)
from .io import (
    dump_model,
    dump_partitions,
    dump_sequence,
    load_model,
    load_partitions,
    load_sequence,
)
from .mcm import Mcm, Method, MethodSpec, build_mcm, default_embedding_rank
from .metrics import ScoreTrace, ami, ecs, modularity, score_sequence
from .pipeline import (
    BenefitTable,
    PipelineConfig,
    detect_fixed_k,
    detect_static,
    detect_variable_k,
    geodesic_ratio,
    geodesic_structure_check,
    select_k_by_modularity,
)

__all__ = [
    # Graphs
    'EdgeSet',
    'GraphSnapshot',
    'PartitionSequence',
    'SnapshotSequence',
    'ensure_connected',
    'remove_nodes',

    # Files
    'load_sequence',
    'dump_sequence',
    'load_partitions',
    'dump_partitions',
    'load_model',
    'dump_model',

    # MCMs
    'Mcm',
    'Method',
    'MethodSpec',
    'build_mcm',
    'default_embedding_rank',

    # Geodesic
    'GeodesicModel',
    'FitReport',
    'fit_geodesic',
    'init_geodesic',
    'objective',

    # Clustering
    'ClusterResult',
    'kmeans',
    'kmedians',
    'fuzzy_cmeans',
    'sign_split',

    # Metrics
    'ScoreTrace',
    'ami',
    'ecs',
    'modularity',
    'score_sequence',

    # Detection
    'PipelineConfig',
    'BenefitTable',
    'detect_static',
    'detect_fixed_k',
    'detect_variable_k',
    'select_k_by_modularity',
    'geodesic_structure_check',
    'geodesic_ratio',
]
