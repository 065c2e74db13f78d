"""Shared fixtures: a randomized corpus of synthetic clips.

Corpus shapes span B in {1,2}, F in 1..8, H,W in 2..8, C in 4..32 and mix
motion models, fresh content and noise. Specs whose token budget cannot
meet the near-orthogonality margin fall back to plain random content
(fresh_content off, noise on), so every draw yields a clip.
"""

import numpy as np
import pytest

from ttf import (
    FusionConfig,
    GridShape,
    InfeasibleSpec,
    RandomWalk,
    Shift,
    Static,
    SynthSpec,
    TokenGrid,
    generate,
)

ANCHOR_CYCLE = ("first", "last", "auto", 0)


def random_clip(rng: np.random.Generator, index: int):
    """One randomized synth clip plus the matching run parameters."""
    H = int(rng.integers(2, 9))
    W = int(rng.integers(2, 9))
    N = H * W
    B = int(rng.integers(1, 3))
    F = int(rng.integers(1, 9))
    C = int(rng.integers(max(4, min(N, 32)), 33)) if N <= 32 else 32
    lim = min(H, W) - 1
    motion = [
        Static(),
        Shift(int(rng.integers(-min(1, lim), min(1, lim) + 1)),
              int(rng.integers(-min(1, lim), min(1, lim) + 1))),
        RandomWalk(min(1, lim)),
    ][index % 3]
    noise = float(rng.choice([0.0, 0.01, 0.05]))
    shape = GridShape(B, F, H, W, C)
    spec = SynthSpec(shape=shape, motion=motion,
                     fresh_content=bool(rng.integers(0, 2)),
                     noise_sigma=noise, seed=int(rng.integers(0, 2**60)))
    try:
        grid, gt = generate(spec)
    except InfeasibleSpec:
        spec = SynthSpec(shape=shape, motion=motion, fresh_content=False,
                         noise_sigma=max(noise, 0.05), seed=spec.seed)
        grid, gt = generate(spec)
    radius = int(rng.integers(0, 3))
    anchor = ANCHOR_CYCLE[index % len(ANCHOR_CYCLE)]
    if anchor == 0:
        anchor = int(rng.integers(0, F))
    return grid, gt, anchor, radius


@pytest.fixture(scope="session")
def clip_corpus():
    rng = np.random.default_rng(20240817)
    return [random_clip(rng, i) for i in range(200)]


def random_grid(rng: np.random.Generator, shape: GridShape) -> TokenGrid:
    """Plain random grid, no redundancy structure."""
    data = rng.standard_normal((shape.B, shape.F, shape.H, shape.W,
                                shape.C)).astype(np.float32)
    return TokenGrid(shape, data)


def static_grid(rng: np.random.Generator, shape: GridShape) -> TokenGrid:
    """Every frame identical to frame 0."""
    frame = rng.standard_normal((shape.B, 1, shape.H, shape.W,
                                 shape.C)).astype(np.float32)
    return TokenGrid(shape, np.repeat(frame, shape.F, axis=1))


def default_config(threshold=0.9, radius=1, anchor="first") -> FusionConfig:
    return FusionConfig(threshold=threshold, radius=radius, anchor=anchor)
