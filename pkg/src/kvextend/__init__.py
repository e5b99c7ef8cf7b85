"""Constructive maximal monotone and nonexpansive extensions of finite data.

Typical use::

    from kvextend import OperatorGraph, extend_nonexpansive

    t = OperatorGraph.from_pairs("nonexpansive", [([0.0], [0.0]), ([2.0], [1.0])])
    T = extend_nonexpansive(t)
    T([5.0])
"""

from .errors import (
    ConsistencyError,
    ConvergenceError,
    ExtensionError,
    FacetLimitError,
    GraphStructureError,
    GraphValidationError,
    OutsidePolytopeError,
    SolverError,
)
from .extension import (
    ExtensionOperator,
    KVExtension,
    NonexpansiveExtension,
    ResolventResult,
    Variant,
    build,
    build_constrained,
    build_plain,
    build_projected,
    extend_kv,
    extend_nonexpansive,
    resolvent,
    resolvent_projected,
)
from .fitzpatrick import (
    ConjugateProgram,
    PolyhedralFunction,
    build_conjugate,
    build_fitzpatrick,
    conjugate_eval,
    evaluate,
)
from .graph import (
    Kind,
    OperatorGraph,
    firmly_to_monotone,
    from_firmly,
    monotone_to_firmly,
    monotone_to_nonexpansive,
    nonexpansive_to_monotone,
    to_firmly,
    validate,
)
from .oracles import check_pairwise, grid_conjugate, grid_psi, grid_resolvent
from .polyhedral import Cone, Polytope, facets, hull, normal_cone, project, tangent_cone_member
from .proximal import (
    Certificate,
    PsiProgram,
    graph_member,
    membership_gap,
    psi_eval,
    verify_certificate,
)
from .types import INF, ExtReal, ValidationReport

__version__ = "0.1.0"
