"""Reference server for the masked-position distribution wire protocol.

Speaks newline-delimited JSON over stdio or HTTP POST /v1/distributions.
Ships a deterministic keyed-hash stub so the full cross-process path is
testable with zero ML dependencies; a real masked-LM backend is best-effort.
"""

from .protocol import ProtocolError, handle_request
from .stub import StubModel

__all__ = ["ProtocolError", "StubModel", "handle_request"]
