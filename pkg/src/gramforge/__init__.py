"""Gram dimension certificates and low-rank psd completions of partial matrices."""
from .completion import (
    Certificate,
    CompletionResult,
    DistanceData,
    apex_complete,
    certify,
    clique_sum_complete,
    contract_lift,
    k222_witness,
    ktree_complete,
    phi,
    phi_inv,
    verify_certificate,
    verify_completion,
    zero_extend,
)
from .config import DEFAULT, RunConfig
from .errors import GramforgeError
from .graphs import Graph, has_minor, named_graph, suspension, treewidth
from .oracle import edm_fit, lowrank_fit, orthogonality_dimension_search
from .partial import PartialMatrix, project_to_graph
from .sdp import (
    SdpProblem,
    SdpSolution,
    equilibrium_residual,
    maxcut_relaxation,
    psd_completion_feasible,
    rank_reduce,
    sdp_solve,
    stretch,
)

__version__ = "0.1.0"
