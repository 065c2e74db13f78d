"""Thin adapter exposing token-fusion compression to numpy pipelines.

All numeric work is delegated to the ``ttf`` CLI through its binary file
formats; this package only converts array layouts. Inputs that are already
contiguous float32 are passed through without copying (``copied`` on the
result records whether a conversion copy was needed).
"""

from .bridge import BridgeError, BridgeResult, bridge_compress, bridge_decode_positions

__version__ = "0.1.0"

__all__ = ["BridgeError", "BridgeResult", "bridge_compress",
           "bridge_decode_positions", "__version__"]
