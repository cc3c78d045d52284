"""Client for the model wire protocol: newline-delimited JSON over stdio or HTTP.

A request carries the full sequence (mask sentinel -1), the positions to
predict, and the sampling parameters; the response carries raw per-position
distributions whose probabilities are decimal strings with 17 significant
digits, so both sides parse bit-identical floats. The transport is strictly
one request in flight per session.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import urllib.error
import urllib.request
import uuid
from typing import Optional, Sequence

import numpy as np

from .sampling import SamplingConfig

__all__ = [
    "BridgeModel",
    "BridgeSession",
    "Nondeterminism",
    "ProtocolViolation",
    "Transport",
    "probe_determinism",
    "request_distributions",
]

PROTOCOL_VERSION = 1


class Transport(RuntimeError):
    """The endpoint went away or could not be reached."""


class ProtocolViolation(RuntimeError):
    """The endpoint answered with something outside the wire format."""


class Nondeterminism(RuntimeError):
    """Identical requests produced different payloads; the endpoint is unusable."""


class BridgeSession:
    """One serving endpoint: a child process on stdio or an HTTP URL."""

    def __init__(self, *, process: Optional[subprocess.Popen] = None, url: Optional[str] = None):
        if (process is None) == (url is None):
            raise ValueError("exactly one of process or url is required")
        self._process = process
        self._url = url
        self.session_id = uuid.uuid4().hex
        self.protocol_version = PROTOCOL_VERSION
        self._next_id = 0

    @classmethod
    def stdio(cls, command: str | Sequence[str]) -> "BridgeSession":
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        try:
            proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise Transport(f"cannot spawn {argv[0]}: {exc}") from exc
        return cls(process=proc)

    @classmethod
    def http(cls, url: str) -> "BridgeSession":
        return cls(url=url.rstrip("/") + "/v1/distributions")

    @property
    def endpoint(self) -> str:
        if self._url is not None:
            return self._url
        return f"pid:{self._process.pid}"

    def roundtrip(self, request: dict) -> dict:
        """Send one request object and return the parsed response object."""
        line = json.dumps(request, separators=(",", ":"))
        if self._process is not None:
            proc = self._process
            if proc.poll() is not None:
                raise Transport("server process has exited")
            try:
                proc.stdin.write(line + "\n")
                proc.stdin.flush()
                answer = proc.stdout.readline()
            except (BrokenPipeError, OSError) as exc:
                raise Transport(f"stdio failure: {exc}") from exc
            if not answer:
                raise Transport("server closed its output stream")
        else:
            req = urllib.request.Request(
                self._url,
                data=line.encode("utf-8"),
                headers={"Content-Type": "application/json"},
            )
            try:
                with urllib.request.urlopen(req, timeout=60) as resp:
                    answer = resp.read().decode("utf-8")
            except (urllib.error.URLError, OSError) as exc:
                raise Transport(f"http failure: {exc}") from exc
        try:
            return json.loads(answer)
        except json.JSONDecodeError as exc:
            raise ProtocolViolation(f"response is not JSON: {answer[:200]!r}") from exc

    def next_request_id(self) -> int:
        self._next_id += 1
        return self._next_id

    def close(self) -> None:
        if self._process is not None:
            try:
                self._process.stdin.close()
            except OSError:
                pass
            self._process.wait(timeout=10)

    def __enter__(self) -> "BridgeSession":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def _build_request(
    session: BridgeSession,
    x_t: Sequence[int],
    positions: Sequence[int],
    sampling: SamplingConfig,
) -> dict:
    return {
        "id": session.next_request_id(),
        "session": session.session_id,
        "sequence": list(x_t),
        "positions": list(positions),
        "temperature": sampling.temperature,
        "top_p": sampling.top_p,
        "top_k": sampling.top_k,
    }


def _parse_distributions(
    response: dict, request_id: int, n_positions: int
) -> list[tuple[np.ndarray, np.ndarray]]:
    if "error" in response:
        raise ProtocolViolation(f"server error: {response['error']}")
    if response.get("id") != request_id:
        raise ProtocolViolation(
            f"response id {response.get('id')!r} does not match request {request_id}"
        )
    payload = response.get("distributions")
    if not isinstance(payload, list) or len(payload) != n_positions:
        raise ProtocolViolation(
            f"expected {n_positions} distributions, got {type(payload).__name__}"
        )
    out = []
    for entry in payload:
        try:
            ids = np.fromiter((int(t) for t, _ in entry), dtype=np.int64, count=len(entry))
            probs = np.fromiter(
                (float(p) for _, p in entry), dtype=np.float64, count=len(entry)
            )
        except (TypeError, ValueError) as exc:
            raise ProtocolViolation(f"malformed distribution entry: {exc}") from exc
        out.append((ids, probs))
    return out


def request_distributions(
    session: BridgeSession,
    x_t: Sequence[int],
    positions: Sequence[int],
    sampling: SamplingConfig,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Fetch raw distributions for the masked positions; caller canonicalizes."""
    request = _build_request(session, x_t, positions, sampling)
    response = session.roundtrip(request)
    return _parse_distributions(response, request["id"], len(positions))


def probe_determinism(
    session: BridgeSession,
    x_t: Sequence[int],
    positions: Sequence[int],
    sampling: SamplingConfig,
) -> None:
    """Issue the same request twice and require byte-identical payloads."""
    first = _build_request(session, x_t, positions, sampling)
    second = dict(first, id=session.next_request_id())
    a = session.roundtrip(first)
    b = session.roundtrip(second)
    pa = json.dumps(a.get("distributions"), sort_keys=True)
    pb = json.dumps(b.get("distributions"), sort_keys=True)
    if pa != pb:
        raise Nondeterminism(f"endpoint {session.endpoint} is not deterministic")


class BridgeModel:
    """Distribution provider backed by a bridge session."""

    def __init__(self, session: BridgeSession, sampling: SamplingConfig):
        self.session = session
        self.sampling = sampling

    def predict(
        self, tokens: Sequence[int], positions: Sequence[int]
    ) -> list[tuple[np.ndarray, np.ndarray]]:
        if not positions:
            return []
        return request_distributions(self.session, tokens, positions, self.sampling)
