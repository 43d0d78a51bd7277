"""lerwlab: Markov chain intersections, loop-erased walks, spanning trees."""

from ._kernels import BACKEND as kernel_backend
from .chains import (
    FiniteChainSpec,
    GluedGraphSpec,
    LatticeChainSpec,
    PathSample,
    chain_spec_from_json,
    exact_marginals,
    green_exact,
    green_truncated,
    induce_on_subset,
    load_chain_spec,
    mc_green,
    sample_path,
)
from .erasure import (
    LoopErasedPath,
    OnlineLoopEraser,
    loop_erase,
    loop_erase_with_prefix,
    partial_loop_erase,
)
from .intersections import (
    HitRecord,
    TimeSpaceSet,
    WeightTable,
    chi_indicator,
    count_intersections,
    lex_first_hit,
    mc_hit_ratio,
    mc_sw_moments,
)
from .wilson import (
    FiniteMultigraph,
    SpanningTree,
    pemantle_check,
    tree_path,
    wilson_tree,
    wire_boundary,
)

__version__ = "0.1.0"

__all__ = [
    "FiniteChainSpec",
    "FiniteMultigraph",
    "GluedGraphSpec",
    "HitRecord",
    "LatticeChainSpec",
    "LoopErasedPath",
    "OnlineLoopEraser",
    "PathSample",
    "SpanningTree",
    "TimeSpaceSet",
    "WeightTable",
    "chain_spec_from_json",
    "chi_indicator",
    "count_intersections",
    "exact_marginals",
    "green_exact",
    "green_truncated",
    "induce_on_subset",
    "kernel_backend",
    "lex_first_hit",
    "load_chain_spec",
    "loop_erase",
    "loop_erase_with_prefix",
    "mc_green",
    "mc_hit_ratio",
    "mc_sw_moments",
    "partial_loop_erase",
    "pemantle_check",
    "sample_path",
    "tree_path",
    "wilson_tree",
    "wire_boundary",
    "__version__",
]
