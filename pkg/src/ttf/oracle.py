"""Brute-force reference matchers and the matching-cost model.

The reference matchers intentionally share nothing with the engine beyond
the data model: candidates are enumerated with plain Python loops and the
same masking / tie rules, so agreement with the vectorized engine is a
meaningful check rather than a tautology.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import enumerate_offsets
from .model import GridShape, InvalidAnchor, MatchResult, TokenGrid

LOCAL_WINDOW = "local_window"
GLOBAL_MATRIX = "global_matrix"

# One C-dim cosine with precomputed norms costs 2C flops (multiply-add = 2);
# norm precomputation costs 2C per token, counted once per grid.
_CONVENTION = "cosine=2C flops with precomputed norms; norms=2C per token"


@dataclass(frozen=True)
class CostReport:
    scheme: str
    radius: int | None
    comparisons: int
    flops: int
    convention: str = _CONVENTION

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "radius": self.radius,
            "comparisons": self.comparisons,
            "flops": self.flops,
            "convention": self.convention,
        }


def estimate_cost(shape: GridShape, scheme: str, radius: int = 1) -> CostReport:
    """Candidate-pair counts and flop estimates for a matching scheme.

    Local window: (F-1)*N*(2r+1)^2 comparisons (before duplicate masking).
    Global matrix: (F-1)*N^2 comparisons.
    """
    F, N, C = shape.F, shape.N, shape.C
    if scheme == LOCAL_WINDOW:
        if radius < 0:
            raise ValueError("radius must be >= 0")
        comparisons = (F - 1) * N * (2 * radius + 1) ** 2
        rad = radius
    elif scheme == GLOBAL_MATRIX:
        comparisons = (F - 1) * N * N
        rad = None
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    flops = comparisons * 2 * C + F * N * 2 * C
    return CostReport(scheme=scheme, radius=rad, comparisons=comparisons,
                      flops=flops)


def _cos(u: np.ndarray, v: np.ndarray, nu: float, nv: float) -> float:
    if nu == 0.0 or nv == 0.0:
        return 0.0
    c = float(np.dot(u, v)) / (nu * nv)
    return min(1.0, max(-1.0, c))


def _prep(grid: TokenGrid):
    tok = grid.tokens().astype(np.float64)
    norms = np.sqrt((tok**2).sum(axis=-1))
    return tok, norms


def brute_force_window(grid: TokenGrid, a: int, r: int) -> MatchResult:
    """Direct enumeration of the clipped local-window search (Reference)."""
    s = grid.shape
    if not (0 <= a < s.F):
        raise InvalidAnchor(f"anchor {a} outside [0, {s.F})")
    tok, norms = _prep(grid)
    offsets = [tuple(o) for o in enumerate_offsets(r)]

    best_sim = np.empty((s.B, s.F, s.N), dtype=np.float64)
    dst = np.empty((s.F, s.N), dtype=np.int64)
    best_offset = np.empty((s.F, s.N, 2), dtype=np.int64)
    best_sim[:, a] = 1.0
    dst[a] = np.arange(s.N)
    best_offset[a] = 0

    for k in range(s.F):
        if k == a:
            continue
        for i in range(s.N):
            y, x = divmod(i, s.W)
            seen = set()
            best_score = -np.inf
            best = None
            for (dy, dx) in offsets:
                ty = min(s.H - 1, max(0, y + dy))
                tx = min(s.W - 1, max(0, x + dx))
                j = ty * s.W + tx
                if j in seen:
                    continue  # duplicate from clipping: keep earliest
                seen.add(j)
                per_b = [
                    _cos(tok[b, k, i], tok[b, a, j], norms[b, k, i], norms[b, a, j])
                    for b in range(s.B)
                ]
                score = sum(per_b) / s.B
                if score > best_score:  # strict: earliest candidate wins ties
                    best_score = score
                    best = (j, (dy, dx), per_b)
            j, off, per_b = best
            dst[k, i] = j
            best_offset[k, i] = off
            for b in range(s.B):
                best_sim[b, k, i] = per_b[b]
    return MatchResult(anchor=a, radius=r, best_sim=best_sim, dst=dst,
                       best_offset=best_offset)


def brute_force_global(grid: TokenGrid, a: int) -> MatchResult:
    """Per-token best match against *all* N anchor tokens; ties go to the
    smallest anchor index."""
    s = grid.shape
    if not (0 <= a < s.F):
        raise InvalidAnchor(f"anchor {a} outside [0, {s.F})")
    tok, norms = _prep(grid)

    best_sim = np.empty((s.B, s.F, s.N), dtype=np.float64)
    dst = np.empty((s.F, s.N), dtype=np.int64)
    best_offset = np.empty((s.F, s.N, 2), dtype=np.int64)
    best_sim[:, a] = 1.0
    dst[a] = np.arange(s.N)
    best_offset[a] = 0

    for k in range(s.F):
        if k == a:
            continue
        for i in range(s.N):
            y, x = divmod(i, s.W)
            best_score = -np.inf
            best_j = -1
            best_per_b = None
            for j in range(s.N):
                per_b = [
                    _cos(tok[b, k, i], tok[b, a, j], norms[b, k, i], norms[b, a, j])
                    for b in range(s.B)
                ]
                score = sum(per_b) / s.B
                if score > best_score:
                    best_score = score
                    best_j = j
                    best_per_b = per_b
            dst[k, i] = best_j
            jy, jx = divmod(best_j, s.W)
            best_offset[k, i] = (jy - y, jx - x)
            for b in range(s.B):
                best_sim[b, k, i] = best_per_b[b]
    return MatchResult(anchor=a, radius=max(s.H, s.W) - 1, best_sim=best_sim,
                       dst=dst, best_offset=best_offset)
