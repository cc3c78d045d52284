"""Request validation and response framing for the distribution protocol.

One JSON object per request: {"id", "session", "sequence", "positions",
"temperature", "top_p", "top_k"}. Unknown fields are ignored for forward
compatibility. Responses echo the id and carry probabilities as decimal
strings with 17 significant digits so both sides parse identical floats.
Malformed requests get an error response; the connection stays up.
"""

from __future__ import annotations

import json
from typing import Any, Callable

Backend = Callable[[list[int], list[int]], list[list[tuple[int, float]]]]


class ProtocolError(ValueError):
    """Request is outside the wire format."""

    def __init__(self, message: str, request_id: Any = None):
        super().__init__(message)
        self.request_id = request_id


def _error_response(message: str, request_id: Any = None) -> dict:
    return {
        "id": request_id,
        "error": {"code": "protocol_violation", "message": message},
    }


def _validate(request: Any) -> tuple[int, list[int], list[int]]:
    if not isinstance(request, dict):
        raise ProtocolError("request must be a JSON object")
    request_id = request.get("id")
    if not isinstance(request_id, int):
        raise ProtocolError("missing integer 'id'", request.get("id"))
    sequence = request.get("sequence")
    if not isinstance(sequence, list) or not all(isinstance(t, int) for t in sequence):
        raise ProtocolError("'sequence' must be a list of integers", request_id)
    positions = request.get("positions")
    if not isinstance(positions, list) or not all(isinstance(p, int) for p in positions):
        raise ProtocolError("'positions' must be a list of integers", request_id)
    for pos in positions:
        if not 0 <= pos < len(sequence):
            raise ProtocolError(f"position {pos} outside the sequence", request_id)
        if sequence[pos] != -1:
            raise ProtocolError(f"position {pos} is not masked", request_id)
    return request_id, sequence, positions


def handle_request(request: Any, backend: Backend) -> dict:
    """Answer one parsed request object; never raises on bad input."""
    try:
        request_id, sequence, positions = _validate(request)
    except ProtocolError as exc:
        rid = exc.request_id if isinstance(exc.request_id, int) else None
        return _error_response(str(exc), rid)
    try:
        dists = backend(sequence, positions)
    except Exception as exc:  # backend fault must not kill the endpoint
        return _error_response(f"backend failure: {exc}", request_id)
    payload = [
        [[token, format(prob, ".17g")] for token, prob in dist] for dist in dists
    ]
    return {"id": request_id, "distributions": payload}


def handle_line(line: str, backend: Backend) -> str:
    """One ndjson request line in, one response line out."""
    try:
        request = json.loads(line)
    except json.JSONDecodeError as exc:
        return json.dumps(_error_response(f"not JSON: {exc}"))
    return json.dumps(handle_request(request, backend), separators=(",", ":"))
