"""Synthetic token videos with known redundancy structure.

Content tokens are random unit vectors refined to mutual near-orthogonality
(pairwise |cos| < 0.3), so "same content" sits at cosine 1.0 and "different
content" below 0.3 -- any threshold in (0.3, 1) separates them exactly.
A random draw alone almost never satisfies the margin for interesting N, so
the draw is followed by a deterministic repulsion refinement; specs whose
(N, C) cannot meet the margin at all are rejected as infeasible.
Generation uses numpy's PCG64 stream, stable across platforms for a fixed
seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import GridShape, InfeasibleSpec, TokenGrid

ORTHO_MARGIN = 0.3
_STOP = 0.295  # refinement stops just inside the margin
_CLIP = 0.26  # gram off-diagonals clipped here during projection
_MAX_ITERS = 3000


@dataclass(frozen=True)
class Static:
    pass


@dataclass(frozen=True)
class Shift:
    dy: int
    dx: int


@dataclass(frozen=True)
class RandomWalk:
    max_step: int


@dataclass(frozen=True)
class SynthSpec:
    shape: GridShape
    motion: Static | Shift | RandomWalk = Static()
    fresh_content: bool = True
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise InfeasibleSpec("noise_sigma must be >= 0")
        if isinstance(self.motion, Shift):
            lim = min(self.shape.H, self.shape.W) - 1
            if abs(self.motion.dy) > lim or abs(self.motion.dx) > lim:
                raise InfeasibleSpec(f"per-step shift exceeds min(H,W)-1 = {lim}")
        if isinstance(self.motion, RandomWalk) and self.motion.max_step < 0:
            raise InfeasibleSpec("max_step must be >= 0")


@dataclass
class GroundTruth:
    """Expected matching structure relative to frame 0 as the anchor.

    offsets[k, i] is the (dy, dx) displacement from source position i to the
    anchor cell holding the same content; fusable[k, i] is False for cells
    filled with fresh content (and for the anchor row itself).
    """

    anchor: int
    offsets: np.ndarray  # [F, N, 2] int64
    fusable: np.ndarray  # [F, N] bool

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "anchor": self.anchor,
            "offsets": self.offsets.tolist(),
            "fusable": self.fusable.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GroundTruth":
        return cls(anchor=int(d["anchor"]),
                   offsets=np.asarray(d["offsets"], dtype=np.int64),
                   fusable=np.asarray(d["fusable"], dtype=bool))


def make_dissimilar_set(rng: np.random.Generator, count: int, C: int) -> np.ndarray:
    """``count`` unit vectors in R^C with pairwise |cos| < ORTHO_MARGIN.

    count <= C gets an exactly orthonormal set (QR of a random matrix).
    Otherwise a random draw is refined by alternating projection on the
    Gram matrix (clip off-diagonal coherence, project back to rank C),
    which reaches packings near the Welch coherence bound. Raises
    InfeasibleSpec when the margin is unreachable for (count, C).
    """
    if count <= C:
        q, _ = np.linalg.qr(rng.standard_normal((C, count)))
        return np.ascontiguousarray(q[:, :count].T)
    welch = np.sqrt((count - C) / (C * (count - 1)))
    if welch >= ORTHO_MARGIN:
        raise InfeasibleSpec(
            f"{count} vectors in C={C} dims cannot all stay below "
            f"|cos| < {ORTHO_MARGIN} (coherence bound {welch:.3f})"
        )
    V = rng.standard_normal((count, C))
    V /= np.sqrt((V**2).sum(axis=1, keepdims=True))
    off = ~np.eye(count, dtype=bool)
    for _ in range(_MAX_ITERS):
        G = V @ V.T
        if np.abs(G[off]).max() < _STOP:
            break
        G = np.clip(G, -_CLIP, _CLIP)
        np.fill_diagonal(G, 1.0)
        lam, U = np.linalg.eigh(G)
        top = lam[-C:].clip(min=0.0)
        V = U[:, -C:] * np.sqrt(top)[None, :]
        V /= np.sqrt((V**2).sum(axis=1, keepdims=True))
    G = V @ V.T
    if np.abs(G[off]).max() >= ORTHO_MARGIN:
        raise InfeasibleSpec(
            f"could not reach pairwise |cos| < {ORTHO_MARGIN} for "
            f"{count} vectors in C={C} dims; reduce N or raise C"
        )
    return V


def _cumulative_offsets(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    """Per-frame cumulative (dy, dx) of the content relative to frame 0."""
    s = spec.shape
    cum = np.zeros((s.F, 2), dtype=np.int64)
    if isinstance(spec.motion, Shift):
        for k in range(1, s.F):
            cum[k] = cum[k - 1] + (spec.motion.dy, spec.motion.dx)
    elif isinstance(spec.motion, RandomWalk):
        lim = min(s.H, s.W) - 1
        m = spec.motion.max_step
        for k in range(1, s.F):
            step = rng.integers(-m, m + 1, size=2)
            cum[k] = np.clip(cum[k - 1] + step, -lim, lim)
    return cum


def generate(spec: SynthSpec) -> tuple[TokenGrid, GroundTruth]:
    """Build a token video for ``spec`` plus its matching ground truth."""
    s = spec.shape
    rng = np.random.default_rng(spec.seed)
    cum = _cumulative_offsets(spec, rng)

    # Cells whose source falls outside frame 0 get fresh content (if enabled).
    revealed = []
    for k in range(1, s.F):
        cy, cx = int(cum[k, 0]), int(cum[k, 1])
        for i in range(s.N):
            y, x = divmod(i, s.W)
            if not (0 <= y - cy < s.H and 0 <= x - cx < s.W):
                revealed.append((k, i))
    n_fresh = len(revealed) if spec.fresh_content else 0

    data = np.empty((s.B, s.F, s.H, s.W, s.C), dtype=np.float64)
    offsets = np.zeros((s.F, s.N, 2), dtype=np.int64)
    fusable = np.zeros((s.F, s.N), dtype=bool)

    for b in range(s.B):
        vecs = make_dissimilar_set(rng, s.N + n_fresh, s.C)
        base, fresh = vecs[: s.N], vecs[s.N:]
        fresh_at = {cell: fresh[j] for j, cell in enumerate(revealed)} \
            if spec.fresh_content else {}
        for k in range(s.F):
            cy, cx = int(cum[k, 0]), int(cum[k, 1])
            for i in range(s.N):
                y, x = divmod(i, s.W)
                u, v = y - cy, x - cx
                if 0 <= u < s.H and 0 <= v < s.W:
                    data[b, k, y, x] = base[u * s.W + v]
                    if b == 0 and k > 0:
                        offsets[k, i] = (u - y, v - x)
                        fusable[k, i] = True
                elif spec.fresh_content:
                    data[b, k, y, x] = fresh_at[(k, i)]
                else:
                    uc = min(s.H - 1, max(0, u))
                    vc = min(s.W - 1, max(0, v))
                    data[b, k, y, x] = base[uc * s.W + vc]
                    if b == 0 and k > 0:
                        offsets[k, i] = (uc - y, vc - x)
                        fusable[k, i] = True

    if spec.noise_sigma > 0:
        data = data + rng.normal(0.0, spec.noise_sigma, size=data.shape)

    grid = TokenGrid(s, data.astype(np.float32))
    return grid, GroundTruth(anchor=0, offsets=offsets, fusable=fusable)
