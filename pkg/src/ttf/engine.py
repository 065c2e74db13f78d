"""The fusion pipeline: anchor selection, clipped local-window matching with
duplicate masking, threshold gating, compression, and decode alignment.

Everything here is a pure function of its inputs. Dot products are reduced in
float64 and the per-frame work units are independent, so results are
byte-identical regardless of the worker count passed to :func:`compress`.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .model import (
    DecodePlan,
    FusionConfig,
    FusionResult,
    GridShape,
    InvalidAnchor,
    MatchResult,
    TokenGrid,
    ZeroNormFrameMean,
)


def enumerate_offsets(r: int) -> np.ndarray:
    """All (dy, dx) in {-r..r}^2, ordered by increasing L-inf ring radius,
    row-major within each ring. (0, 0) is first."""
    out = []
    for q in range(r + 1):
        for dy in range(-q, q + 1):
            for dx in range(-q, q + 1):
                if max(abs(dy), abs(dx)) == q:
                    out.append((dy, dx))
    return np.array(out, dtype=np.int64).reshape(-1, 2)


def project_offset(i: int, dy: int, dx: int, shape: GridShape) -> int:
    """Clipped projection of spatial index i by (dy, dx) onto the grid."""
    y, x = divmod(int(i), shape.W)
    ty = min(shape.H - 1, max(0, y + dy))
    tx = min(shape.W - 1, max(0, x + dx))
    return ty * shape.W + tx


def _projection_table(shape: GridShape, offsets: np.ndarray):
    """Per-offset anchor flat indices and the duplicate-survivor mask.

    Returns (proj [K, N], alive [K, N]): alive[o, i] is False when an
    earlier-enumerated offset clips to the same anchor index at i.
    """
    ys, xs = np.divmod(np.arange(shape.N, dtype=np.int64), shape.W)
    ty = np.clip(ys[None, :] + offsets[:, 0:1], 0, shape.H - 1)
    tx = np.clip(xs[None, :] + offsets[:, 1:2], 0, shape.W - 1)
    proj = ty * shape.W + tx
    K = offsets.shape[0]
    alive = np.ones((K, shape.N), dtype=bool)
    for o in range(1, K):
        alive[o] = ~(proj[:o] == proj[o]).any(axis=0)
    return proj, alive


def _cosine_rows(u: np.ndarray, v: np.ndarray, nu: np.ndarray, nv: np.ndarray) -> np.ndarray:
    """Row-wise cosine of float64 arrays [..., C] with precomputed norms.

    A zero-norm operand makes the cosine 0 by definition.
    """
    dot = (u * v).sum(axis=-1)
    denom = nu * nv
    out = np.zeros_like(dot)
    np.divide(dot, denom, out=out, where=denom > 0.0)
    return np.clip(out, -1.0, 1.0)


def select_anchor(grid: TokenGrid, strategy: str | int) -> int:
    """Resolve the anchor frame index for a strategy.

    'auto' picks the frame whose spatially averaged token has the highest
    cosine against the global mean token; for B > 1 the per-element scores
    are averaged. Ties go to the smallest frame index.
    """
    F = grid.shape.F
    if strategy == "first":
        return 0
    if strategy == "last":
        return F - 1
    if isinstance(strategy, int):
        if not (0 <= strategy < F):
            raise InvalidAnchor(f"explicit anchor {strategy} outside [0, {F})")
        return strategy

    tok = grid.tokens().astype(np.float64)  # [B, F, N, C]
    frame_means = tok.mean(axis=2)  # [B, F, C]
    global_mean = tok.mean(axis=(1, 2))  # [B, C]
    fn = np.sqrt((frame_means**2).sum(axis=-1))  # [B, F]
    gn = np.sqrt((global_mean**2).sum(axis=-1))  # [B]
    if (fn == 0.0).any() or (gn == 0.0).any():
        raise ZeroNormFrameMean(
            "auto anchor selection undefined: a frame mean or the global "
            "mean token has zero norm"
        )
    scores = _cosine_rows(frame_means, global_mean[:, None, :], fn, gn[:, None])
    return int(np.argmax(scores.mean(axis=0)))


def _match_frame(tok64, norms, proj, alive, a, k):
    """Match one source frame against the anchor. Returns (sim [B,N], dst [N],
    offset index [N])."""
    src = tok64[:, k]  # [B, N, C]
    src_n = norms[:, k]  # [B, N]
    K = proj.shape[0]
    B, N = src_n.shape
    sims = np.empty((K, B, N), dtype=np.float64)
    for o in range(K):
        cand = tok64[:, a, proj[o]]  # [B, N, C]
        sims[o] = _cosine_rows(src, cand, src_n, norms[:, a, proj[o]])
    score = sims.mean(axis=1)  # [K, N]
    score[~alive] = -np.inf
    best = np.argmax(score, axis=0)  # first max ties => earliest enumeration
    cols = np.arange(N)
    return sims[best, :, cols].T, proj[best, cols], best


def match_local(grid: TokenGrid, a: int, r: int, workers: int = 1) -> MatchResult:
    """Clipped local-window cosine matching of every source frame against
    anchor frame ``a`` with search radius ``r``."""
    s = grid.shape
    if not (0 <= a < s.F):
        raise InvalidAnchor(f"anchor {a} outside [0, {s.F})")
    offsets = enumerate_offsets(r)
    proj, alive = _projection_table(s, offsets)

    tok64 = grid.tokens().astype(np.float64)
    norms = np.sqrt((tok64**2).sum(axis=-1))  # [B, F, N]

    best_sim = np.empty((s.B, s.F, s.N), dtype=np.float64)
    dst = np.empty((s.F, s.N), dtype=np.int64)
    best_offset = np.empty((s.F, s.N, 2), dtype=np.int64)

    best_sim[:, a] = 1.0
    dst[a] = np.arange(s.N)
    best_offset[a] = 0

    frames = [k for k in range(s.F) if k != a]

    def run(k):
        return k, _match_frame(tok64, norms, proj, alive, a, k)

    if workers > 1 and len(frames) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, frames))
    else:
        results = [run(k) for k in frames]

    for k, (sim, d, o) in results:
        best_sim[:, k] = sim
        dst[k] = d
        best_offset[k] = offsets[o]
    return MatchResult(anchor=a, radius=r, best_sim=best_sim, dst=dst,
                       best_offset=best_offset)


def gate(match: MatchResult, t: float) -> np.ndarray:
    """Retention mask [F, N]: anchor rows always kept; a source position is
    kept if any batch element's best similarity is <= t."""
    keep = (match.best_sim <= t).any(axis=0)
    keep[match.anchor] = True
    return keep


def compress(grid: TokenGrid, config: FusionConfig, workers: int = 1) -> FusionResult:
    """Full pipeline: select anchor, match, gate, stack, align positions."""
    s = grid.shape
    a = select_anchor(grid, config.anchor)
    match = match_local(grid, a, config.radius, workers=workers)
    keep = gate(match, config.threshold)

    tok = grid.tokens()  # [B, F, N, C] float32
    ys, xs = np.divmod(np.arange(s.N, dtype=np.int64), s.W)

    # Anchor rows first (row-major spatial order), then preserved source
    # rows in ascending (k, i).
    src_keep = keep.copy()
    src_keep[a] = False
    ks, iis = np.nonzero(src_keep)
    P = int(len(ks))

    tokens = np.concatenate([tok[:, a], tok[:, ks, iis]], axis=1)
    positions = np.empty((s.N + P, 3), dtype=np.int64)
    positions[: s.N, 0] = a
    positions[: s.N, 1] = ys
    positions[: s.N, 2] = xs
    positions[s.N:, 0] = ks
    positions[s.N:, 1] = ys[iis]
    positions[s.N:, 2] = xs[iis]

    rho = 1.0 - (s.N + P) / (s.F * s.N)
    return FusionResult(anchor=a, keep_mask=keep,
                        tokens=np.ascontiguousarray(tokens),
                        positions=positions, dst=match.dst, preserved=P,
                        rho=rho, match=match)


def decode_plan(result: FusionResult, text_tokens: int) -> DecodePlan:
    """Prefill length for a compressed clip plus T text tokens."""
    if text_tokens < 0:
        raise ValueError("text token count must be >= 0")
    return DecodePlan(text_tokens=text_tokens, visual_kept=result.kept_total)


def decode_position(plan: DecodePlan, step: int) -> tuple[int, int]:
    """Position index and attention-mask length for decode step ``step``."""
    if step < 0:
        raise ValueError("decode step must be >= 0")
    pos = plan.prefill_length + step
    return pos, pos + 1
