"""Dynamic stochastic block model generators."""

from .config import SbmConfig, TreeNode, Variant, default_tree, equal_sizes, equal_split
from .generators import (
    SbmSample,
    gen_dsbm,
    gen_hsbm,
    gen_merge,
    gen_mmsbm,
    gen_mvsbm,
    gen_scbm,
    gen_simple,
    gen_ssbm,
    generate,
    merge_progress,
)

__all__ = [
    # Parameters
    'SbmConfig',
    'TreeNode',
    'Variant',
    'default_tree',
    'equal_sizes',
    'equal_split',

    # Generators
    'SbmSample',
    'gen_simple',
    'gen_ssbm',
    'gen_mmsbm',
    'gen_dsbm',
    'gen_scbm',
    'gen_hsbm',
    'gen_mvsbm',
    'gen_merge',
    'generate',
    'merge_progress',
]
