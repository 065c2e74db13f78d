"""CLI-backed compression bridge.

Wire formats (little-endian), matching the engine's published layouts:

TTOK: "TTOK" | u16 version=1 | u16 flags=0 | u32 B,F,H,W,C | f32 payload
TTKZ: "TTKZ" | u16 version=1 | u32 B,F,H,W,C,anchor,P | f32 threshold
      | u32 radius | (N+P) x (u32 k,y,x) | F*N u32 dst
      | F*N keep bits (MSB-first, byte-padded) | B*(N+P)*C f32 tokens
"""

from __future__ import annotations

import os
import shutil
import struct
import subprocess
import tempfile
from dataclasses import dataclass

import numpy as np

_TTOK_HEADER = struct.Struct("<4sHH5I")
_TTKZ_HEADER = struct.Struct("<4sH7IfI")


class BridgeError(Exception):
    """Any failure surfaced by the engine or the wire formats."""


@dataclass
class BridgeResult:
    tokens: np.ndarray  # [B, N+P, C] float32
    positions: np.ndarray  # [N+P, 3] int64 triples (k, y, x)
    keep_mask: np.ndarray  # [F, N] bool
    dst: np.ndarray  # [F, N] int64
    rho: float
    anchor: int
    copied: bool  # input needed a layout-conversion copy


def _cli() -> str:
    exe = os.environ.get("TTF_CLI") or shutil.which("ttf")
    if not exe:
        raise BridgeError(
            "ttf CLI not found; install the engine or set TTF_CLI"
        )
    return exe


def encode_ttok(tokens: np.ndarray) -> tuple[bytes, bool]:
    """Serialize a [B, F, H, W, C] array to TTOK bytes.

    Returns (blob, copied): copied is True when the input was not already
    contiguous little-endian float32.
    """
    arr = np.asarray(tokens)
    if arr.ndim != 5:
        raise BridgeError(f"expected a [B,F,H,W,C] array, got ndim={arr.ndim}")
    want = np.dtype("<f4")
    copied = not (arr.dtype == want and arr.flags.c_contiguous)
    arr = np.ascontiguousarray(arr, dtype=want)
    if not np.isfinite(arr).all():
        raise BridgeError("token array contains NaN or infinity")
    header = _TTOK_HEADER.pack(b"TTOK", 1, 0, *arr.shape)
    return header + arr.tobytes(), copied


def decode_ttkz(blob: bytes) -> BridgeResult:
    if len(blob) < _TTKZ_HEADER.size or blob[:4] != b"TTKZ":
        raise BridgeError("not a TTKZ file")
    (_, version, B, F, H, W, C, anchor, P,
     _threshold, _radius) = _TTKZ_HEADER.unpack_from(blob)
    if version != 1:
        raise BridgeError(f"unsupported TTKZ version {version}")
    N = H * W
    total = N + P
    off = _TTKZ_HEADER.size
    positions = np.frombuffer(blob, dtype="<u4", count=total * 3,
                              offset=off).reshape(total, 3).astype(np.int64)
    off += total * 12
    dst = np.frombuffer(blob, dtype="<u4", count=F * N,
                        offset=off).reshape(F, N).astype(np.int64)
    off += F * N * 4
    nbits = (F * N + 7) // 8
    bits = np.frombuffer(blob, dtype=np.uint8, count=nbits, offset=off)
    keep = np.unpackbits(bits, count=F * N).reshape(F, N).astype(bool)
    off += nbits
    tokens = np.frombuffer(blob, dtype="<f4", count=B * total * C,
                           offset=off).reshape(B, total, C).copy()
    rho = 1.0 - total / (F * N)
    return BridgeResult(tokens=tokens, positions=positions, keep_mask=keep,
                        dst=dst, rho=rho, anchor=int(anchor), copied=False)


def bridge_compress(tokens: np.ndarray, threshold: float,
                    anchor: str | int = "auto", radius: int = 1) -> BridgeResult:
    """Compress a [B, F, H, W, C] float32 array via the ttf CLI."""
    blob, copied = encode_ttok(tokens)
    with tempfile.TemporaryDirectory(prefix="ttf-bridge-") as d:
        inp = os.path.join(d, "in.ttok")
        out = os.path.join(d, "out.ttkz")
        with open(inp, "wb") as f:
            f.write(blob)
        proc = subprocess.run(
            [_cli(), "compress", inp, out, "--threshold", repr(float(threshold)),
             "--anchor", str(anchor), "--radius", str(int(radius))],
            capture_output=True, text=True,
        )
        if proc.returncode != 0:
            msg = (proc.stderr or proc.stdout).strip()
            raise BridgeError(f"ttf compress failed (exit {proc.returncode}): {msg}")
        with open(out, "rb") as f:
            result = decode_ttkz(f.read())
    result.copied = copied
    return result


def bridge_decode_positions(n_visual_kept: int, text_tokens: int,
                            steps: int) -> np.ndarray:
    """Decode-step position indices: entry l is (n_visual_kept + T) + l."""
    if n_visual_kept < 0 or text_tokens < 0 or steps < 0:
        raise BridgeError("arguments must be non-negative")
    base = n_visual_kept + text_tokens
    return base + np.arange(steps, dtype=np.int64)
