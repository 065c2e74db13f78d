"""Bit-exact binary file formats and the stats JSON document.

TTOK (raw token video), little-endian:
    magic "TTOK" | u16 version=1 | u16 flags=0 | u32 B,F,H,W,C
    payload: B*F*H*W*C float32, row-major [B][F][H][W][C]

TTKZ (compressed output), little-endian:
    magic "TTKZ" | u16 version=1 | u32 B,F,H,W,C,anchor,P | f32 threshold
    | u32 radius
    then (N+P) position triples (u32 k, u32 y, u32 x)
    then F*N dst entries (u32)
    then F*N keep bits, packed row-major MSB-first, padded to a byte
    then B*(N+P)*C token float32

All writes go to a temp file in the target directory followed by an atomic
rename, so a partial file is never left behind.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from .model import (
    FormatError,
    FusionConfig,
    FusionResult,
    GridShape,
    MatchResult,
    TokenGrid,
    validate_grid,
)
from .oracle import LOCAL_WINDOW, estimate_cost

TTOK_MAGIC = b"TTOK"
TTKZ_MAGIC = b"TTKZ"
_TTOK_HEADER = struct.Struct("<4sHH5I")
_TTKZ_HEADER = struct.Struct("<4sH7IfI")
SIM_HIST_BINS = 32


def _atomic_write(path: str, payload: bytes) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def ttok_bytes(grid: TokenGrid) -> bytes:
    s = grid.shape
    header = _TTOK_HEADER.pack(TTOK_MAGIC, 1, 0, s.B, s.F, s.H, s.W, s.C)
    payload = np.ascontiguousarray(grid.data, dtype="<f4").tobytes()
    return header + payload


def write_ttok(path: str, grid: TokenGrid) -> None:
    _atomic_write(path, ttok_bytes(grid))


def parse_ttok(blob: bytes) -> TokenGrid:
    if len(blob) < _TTOK_HEADER.size:
        raise FormatError("magic", "file shorter than the TTOK header")
    magic, version, flags, B, F, H, W, C = _TTOK_HEADER.unpack_from(blob)
    if magic != TTOK_MAGIC:
        raise FormatError("magic", f"expected {TTOK_MAGIC!r}, got {magic!r}")
    if version != 1:
        raise FormatError("version", f"unsupported version {version}")
    if flags != 0:
        raise FormatError("flags", f"expected 0, got {flags}")
    try:
        shape = GridShape(B, F, H, W, C)
    except Exception as e:
        raise FormatError("shape", str(e)) from e
    expect = _TTOK_HEADER.size + 4 * shape.total
    if len(blob) != expect:
        raise FormatError(
            "payload", f"file length {len(blob)} != expected {expect}"
        )
    flat = np.frombuffer(blob, dtype="<f4", offset=_TTOK_HEADER.size)
    grid = TokenGrid.from_flat(shape, flat.copy())
    try:
        return validate_grid(grid)
    except Exception as e:
        raise FormatError("payload", str(e)) from e


def read_ttok(path: str) -> TokenGrid:
    with open(path, "rb") as f:
        return parse_ttok(f.read())


def ttkz_bytes(result: FusionResult, shape: GridShape,
               threshold: float, radius: int) -> bytes:
    s = shape
    total = s.N + result.preserved
    parts = [
        _TTKZ_HEADER.pack(TTKZ_MAGIC, 1, s.B, s.F, s.H, s.W, s.C,
                          result.anchor, result.preserved,
                          float(threshold), radius),
        result.positions.astype("<u4").tobytes(),
        result.dst.astype("<u4").tobytes(),
        np.packbits(result.keep_mask.ravel()).tobytes(),
        np.ascontiguousarray(result.tokens, dtype="<f4").tobytes(),
    ]
    assert result.positions.shape == (total, 3)
    return b"".join(parts)


def write_ttkz(path: str, result: FusionResult, shape: GridShape,
               threshold: float, radius: int) -> None:
    _atomic_write(path, ttkz_bytes(result, shape, threshold, radius))


@dataclass
class TtkzFile:
    """Decoded TTKZ contents; mirrors FusionResult plus the run parameters."""

    shape: GridShape
    anchor: int
    preserved: int
    threshold: float
    radius: int
    positions: np.ndarray  # [N+P, 3] int64
    dst: np.ndarray  # [F, N] int64
    keep_mask: np.ndarray  # [F, N] bool
    tokens: np.ndarray  # [B, N+P, C] float32

    @property
    def rho(self) -> float:
        s = self.shape
        return 1.0 - (s.N + self.preserved) / (s.F * s.N)


def parse_ttkz(blob: bytes) -> TtkzFile:
    if len(blob) < _TTKZ_HEADER.size:
        raise FormatError("magic", "file shorter than the TTKZ header")
    (magic, version, B, F, H, W, C, anchor, P,
     threshold, radius) = _TTKZ_HEADER.unpack_from(blob)
    if magic != TTKZ_MAGIC:
        raise FormatError("magic", f"expected {TTKZ_MAGIC!r}, got {magic!r}")
    if version != 1:
        raise FormatError("version", f"unsupported version {version}")
    try:
        shape = GridShape(B, F, H, W, C)
    except Exception as e:
        raise FormatError("shape", str(e)) from e
    if anchor >= F:
        raise FormatError("anchor", f"anchor {anchor} outside [0, {F})")
    N = shape.N
    total = N + P
    off = _TTKZ_HEADER.size
    sizes = [total * 3 * 4, F * N * 4, (F * N + 7) // 8, B * total * C * 4]
    if len(blob) != off + sum(sizes):
        raise FormatError(
            "payload", f"file length {len(blob)} != expected {off + sum(sizes)}"
        )
    positions = np.frombuffer(blob, dtype="<u4", count=total * 3,
                              offset=off).reshape(total, 3).astype(np.int64)
    off += sizes[0]
    dst = np.frombuffer(blob, dtype="<u4", count=F * N,
                        offset=off).reshape(F, N).astype(np.int64)
    off += sizes[1]
    bits = np.frombuffer(blob, dtype=np.uint8, count=sizes[2], offset=off)
    keep = np.unpackbits(bits, count=F * N).reshape(F, N).astype(bool)
    off += sizes[2]
    tokens = np.frombuffer(blob, dtype="<f4", count=B * total * C,
                           offset=off).reshape(B, total, C).copy()
    return TtkzFile(shape=shape, anchor=anchor, preserved=P,
                    threshold=threshold, radius=radius, positions=positions,
                    dst=dst, keep_mask=keep, tokens=tokens)


def read_ttkz(path: str) -> TtkzFile:
    with open(path, "rb") as f:
        return parse_ttkz(f.read())


def sim_histogram(match: MatchResult) -> np.ndarray:
    """32 equal-width bins over [-1, 1] of best similarities at source
    positions, across the batch. Counts sum to (F-1)*N*B."""
    F = match.best_sim.shape[1]
    src = [k for k in range(F) if k != match.anchor]
    vals = match.best_sim[:, src, :].ravel()
    bins = np.clip(((vals + 1.0) / 2.0 * SIM_HIST_BINS).astype(np.int64),
                   0, SIM_HIST_BINS - 1)
    return np.bincount(bins, minlength=SIM_HIST_BINS)


def stats_document(result: FusionResult, shape: GridShape,
                   config: FusionConfig, text_tokens: int = 0) -> dict:
    l_prime = shape.N + result.preserved
    return {
        "schema": 1,
        "anchor": result.anchor,
        "strategy": str(config.anchor),
        "threshold": config.threshold,
        "radius": config.radius,
        "N": shape.N,
        "P": result.preserved,
        "rho": result.rho,
        "sim_histogram": sim_histogram(result.match).tolist(),
        "cost": estimate_cost(shape, LOCAL_WINDOW, config.radius).to_dict(),
        "decode": {
            "T": text_tokens,
            "L_prime": l_prime,
            "L_pre": l_prime + text_tokens,
        },
    }


def write_stats(path: str, doc: dict) -> None:
    _atomic_write(path, (json.dumps(doc, indent=2) + "\n").encode())
