"""Partially symmetric CP decomposition by the multi-subspace power method."""
from .decompose import Component, DecompositionResult, MSPMConfig, decompose, reconstruct, relative_error
from .exceptions import CompletionError, DeflationError, FormatError
from .io import read_tensor, write_tensor
from .planner import FlatteningPlan, optimal_plan, r_max_of, r_of
from .power import PSVT, PowerConfig, ShiftPolicy, run_pshopm
from .subspace import DeflationState, SlicedSubspace, deflate, extract
from .tensor import PSTensor, SymmetryType, contract, flatten, make_rank_one, symmetrize, vectorize

__version__ = "0.1.0"

__all__ = [
    "Component",
    "CompletionError",
    "DecompositionResult",
    "DeflationError",
    "DeflationState",
    "FlatteningPlan",
    "FormatError",
    "MSPMConfig",
    "PSTensor",
    "PSVT",
    "PowerConfig",
    "ShiftPolicy",
    "SlicedSubspace",
    "SymmetryType",
    "contract",
    "decompose",
    "deflate",
    "extract",
    "flatten",
    "make_rank_one",
    "optimal_plan",
    "r_max_of",
    "r_of",
    "read_tensor",
    "reconstruct",
    "relative_error",
    "run_pshopm",
    "symmetrize",
    "vectorize",
    "write_tensor",
]
