"""Temporal token fusion: training-free compression of video visual-token
grids via clipped local-window cosine matching against an anchor frame."""

from .engine import (
    compress,
    decode_plan,
    decode_position,
    enumerate_offsets,
    gate,
    match_local,
    project_offset,
    select_anchor,
)
from .model import (
    DecodePlan,
    FormatError,
    FusionConfig,
    FusionResult,
    GridShape,
    InfeasibleSpec,
    InvalidAnchor,
    MatchResult,
    NonFiniteValue,
    OutOfRange,
    ShapeMismatch,
    TokenGrid,
    TtfError,
    ZeroNormFrameMean,
    flat_index,
    unflat_index,
    validate_grid,
)
from .oracle import (
    GLOBAL_MATRIX,
    LOCAL_WINDOW,
    CostReport,
    brute_force_global,
    brute_force_window,
    estimate_cost,
)
from .synth import GroundTruth, RandomWalk, Shift, Static, SynthSpec, generate

__version__ = "0.1.0"

__all__ = [
    "compress", "decode_plan", "decode_position", "enumerate_offsets",
    "gate", "match_local", "project_offset", "select_anchor",
    "DecodePlan", "FormatError", "FusionConfig", "FusionResult", "GridShape",
    "InfeasibleSpec", "InvalidAnchor", "MatchResult", "NonFiniteValue",
    "OutOfRange", "ShapeMismatch", "TokenGrid", "TtfError",
    "ZeroNormFrameMean", "flat_index", "unflat_index", "validate_grid",
    "GLOBAL_MATRIX", "LOCAL_WINDOW", "CostReport", "brute_force_global",
    "brute_force_window", "estimate_cost",
    "GroundTruth", "RandomWalk", "Shift", "Static", "SynthSpec", "generate",
    "__version__",
]
