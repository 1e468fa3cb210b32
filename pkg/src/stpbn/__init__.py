"""Semi-tensor-product toolkit for Boolean (control) networks."""

from .control import (
    ConstrainedAggregatedBcn,
    ControlConstraint,
    Realization,
    aggregated_bcn,
    apply_constraints,
    closure_bcn,
    min_realization,
    parse_constraints,
    simulate_constrained,
    verify_block_structure,
    verify_io_equivalence,
)
from .formula import (
    FormulaError,
    NetworkDef,
    SubsetSpec,
    evaluate,
    index_function,
    load_network,
    parse_formula,
    parse_network,
    structure_matrix,
)
from .invariant import (
    AggregatedSystem,
    ClosureResult,
    FunctionSet,
    InvarianceCertificate,
    Refusal,
    aggregated_dynamics,
    close_functions,
    closure_bn,
    combined_structure,
    invariance_certificate,
    is_regular,
    union_invariant,
)
from .network import (
    BcnAssr,
    BnAssr,
    CoordinateChange,
    OutputMap,
    apply_coordinate_change,
    assemble,
    assemble_bcn,
    assemble_bn,
    assemble_outputs,
    find_attractors,
    state_transition_graph,
    step,
    trajectory,
)
from .stp import (
    DeltaVector,
    DenseMatrix,
    LogicalMatrix,
    OnesVector,
    ZeroExtendedLogicalMatrix,
    delta,
    khatri_rao,
    kron,
    logical_compose,
    state_index_decode,
    state_index_encode,
    stp,
    swap_matrix,
    transpose,
)

__version__ = "0.1.0"

__all__ = [
    "aggregated_bcn",
    "aggregated_dynamics",
    "AggregatedSystem",
    "apply_constraints",
    "apply_coordinate_change",
    "assemble",
    "assemble_bcn",
    "assemble_bn",
    "assemble_outputs",
    "BcnAssr",
    "BnAssr",
    "close_functions",
    "closure_bcn",
    "closure_bn",
    "ClosureResult",
    "combined_structure",
    "ConstrainedAggregatedBcn",
    "ControlConstraint",
    "CoordinateChange",
    "delta",
    "DeltaVector",
    "DenseMatrix",
    "evaluate",
    "find_attractors",
    "FormulaError",
    "FunctionSet",
    "index_function",
    "invariance_certificate",
    "InvarianceCertificate",
    "is_regular",
    "khatri_rao",
    "kron",
    "load_network",
    "logical_compose",
    "LogicalMatrix",
    "min_realization",
    "NetworkDef",
    "OnesVector",
    "OutputMap",
    "parse_constraints",
    "parse_formula",
    "parse_network",
    "Realization",
    "Refusal",
    "simulate_constrained",
    "state_index_decode",
    "state_index_encode",
    "state_transition_graph",
    "step",
    "stp",
    "structure_matrix",
    "SubsetSpec",
    "swap_matrix",
    "trajectory",
    "transpose",
    "union_invariant",
    "verify_block_structure",
    "verify_io_equivalence",
    "ZeroExtendedLogicalMatrix",
]
