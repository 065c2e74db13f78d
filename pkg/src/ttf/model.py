"""Shared data model: token grids, configs, match/fusion results, errors.

Token elements are 32-bit floats; all similarity accumulation is done in
64-bit so results do not depend on how a reduction is chunked.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ANCHOR_STRATEGIES = ("first", "last", "auto")


class TtfError(Exception):
    """Base class for all errors raised by this package."""


class ShapeMismatch(TtfError):
    pass


class NonFiniteValue(TtfError):
    """A NaN or infinity was found in token data.

    ``flat_index`` is the first offending position in the row-major
    [B][F][H][W][C] layout.
    """

    def __init__(self, flat_index: int):
        self.flat_index = int(flat_index)
        super().__init__(f"non-finite value at flat index {self.flat_index}")


class OutOfRange(TtfError):
    pass


class InvalidAnchor(TtfError):
    pass


class ZeroNormFrameMean(TtfError):
    pass


class InfeasibleSpec(TtfError):
    pass


class FormatError(TtfError):
    """Malformed binary file; ``field`` names the offending header field."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


@dataclass(frozen=True)
class GridShape:
    """Geometry of a batched token video: B batches, F frames, HxW tokens
    of C channels per frame."""

    B: int
    F: int
    H: int
    W: int
    C: int

    def __post_init__(self):
        for name in ("B", "F", "H", "W", "C"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise ShapeMismatch(f"{name} must be an integer, got {v!r}")
            if v < 1:
                raise ShapeMismatch(f"{name} must be >= 1, got {v}")

    @property
    def N(self) -> int:
        return self.H * self.W

    @property
    def total(self) -> int:
        return self.B * self.F * self.N * self.C


def flat_index(y: int, x: int, shape: GridShape) -> int:
    """Row-major flat spatial index i = y*W + x."""
    if not (0 <= y < shape.H and 0 <= x < shape.W):
        raise OutOfRange(f"(y={y}, x={x}) outside {shape.H}x{shape.W} grid")
    return y * shape.W + x


def unflat_index(i: int, shape: GridShape) -> tuple[int, int]:
    """Inverse of :func:`flat_index`: recover (y, x) from i."""
    if not (0 <= i < shape.N):
        raise OutOfRange(f"i={i} outside [0, {shape.N})")
    return divmod(i, shape.W)


@dataclass
class TokenGrid:
    """Dense float32 token video, stored [B, F, H, W, C] row-major."""

    shape: GridShape
    data: np.ndarray

    @classmethod
    def from_flat(cls, shape: GridShape, flat: np.ndarray) -> "TokenGrid":
        flat = np.asarray(flat, dtype=np.float32)
        if flat.size != shape.total:
            raise ShapeMismatch(
                f"data length {flat.size} != B*F*N*C = {shape.total}"
            )
        return cls(shape, flat.reshape(shape.B, shape.F, shape.H, shape.W, shape.C))

    def tokens(self) -> np.ndarray:
        """View the grid as [B, F, N, C]."""
        s = self.shape
        return self.data.reshape(s.B, s.F, s.N, s.C)


def validate_grid(grid: TokenGrid) -> TokenGrid:
    """Check shape consistency and finiteness; returns the grid unchanged."""
    s = grid.shape
    data = grid.data
    if data.dtype != np.float32:
        raise ShapeMismatch(f"token dtype must be float32, got {data.dtype}")
    if data.size != s.total:
        raise ShapeMismatch(f"data length {data.size} != B*F*N*C = {s.total}")
    if data.shape != (s.B, s.F, s.H, s.W, s.C):
        raise ShapeMismatch(
            f"data shape {data.shape} != {(s.B, s.F, s.H, s.W, s.C)}"
        )
    finite = np.isfinite(data.ravel())
    if not finite.all():
        raise NonFiniteValue(int(np.argmin(finite)))
    return grid


def parse_anchor(spec) -> str | int:
    """Normalize an anchor strategy: 'first' | 'last' | 'auto' | frame index."""
    if isinstance(spec, (int, np.integer)) and not isinstance(spec, bool):
        return int(spec)
    if isinstance(spec, str):
        s = spec.strip().lower()
        if s in ANCHOR_STRATEGIES:
            return s
        try:
            return int(s)
        except ValueError:
            pass
    raise TtfError(f"invalid anchor strategy {spec!r}")


@dataclass(frozen=True)
class FusionConfig:
    """All knobs of the fusion pipeline."""

    threshold: float
    radius: int = 1
    anchor: str | int = "auto"

    def __post_init__(self):
        t = self.threshold
        if not np.isfinite(t) or not (-1.0 <= t <= 1.0):
            raise TtfError(f"threshold must be finite in [-1, 1], got {t}")
        if self.radius < 0:
            raise TtfError(f"radius must be >= 0, got {self.radius}")
        object.__setattr__(self, "anchor", parse_anchor(self.anchor))


@dataclass
class MatchResult:
    """Best local match per source position.

    best_sim is per batch element; dst and best_offset are shared across the
    batch (the offset maximizes the batch-mean similarity). Anchor-frame
    entries are set to sim 1.0 / dst(a,i)=i / offset (0,0) by convention.
    """

    anchor: int
    radius: int
    best_sim: np.ndarray  # [B, F, N] float64 in [-1, 1]
    dst: np.ndarray  # [F, N] int64, anchor flat indices
    best_offset: np.ndarray  # [F, N, 2] int64, (dy, dx)


@dataclass
class FusionResult:
    """Compressed token stack with positionally consistent metadata."""

    anchor: int
    keep_mask: np.ndarray  # [F, N] bool
    tokens: np.ndarray  # [B, N+P, C] float32
    positions: np.ndarray  # [N+P, 3] int64 triples (k, y, x)
    dst: np.ndarray  # [F, N] int64
    preserved: int  # P
    rho: float
    match: MatchResult = field(repr=False, default=None)

    @property
    def kept_total(self) -> int:
        return self.tokens.shape[1]


@dataclass(frozen=True)
class DecodePlan:
    """Prefill length bookkeeping for cache-aware decoding."""

    text_tokens: int
    visual_kept: int  # L' = N + P

    @property
    def prefill_length(self) -> int:
        return self.visual_kept + self.text_tokens
