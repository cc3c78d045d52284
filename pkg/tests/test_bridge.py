"""Wire protocol client against scripted stdio servers."""

import sys
import textwrap

import numpy as np
import pytest

from stead.bridge import (
    BridgeModel,
    BridgeSession,
    Nondeterminism,
    ProtocolViolation,
    Transport,
    probe_determinism,
    request_distributions,
)
from stead.engine import DenoiseSchedule, GenerationConfig, generate_cover
from stead.sampling import SamplingConfig
from conftest import key_from_int

UNIFORM_SERVER = textwrap.dedent(
    """
    import json, sys
    V = 16
    for line in sys.stdin:
        req = json.loads(line)
        dists = [
            [[t, format(1.0 / V, ".17g")] for t in range(V)]
            for _ in req["positions"]
        ]
        print(json.dumps({"id": req["id"], "distributions": dists}), flush=True)
    """
)

BAD_ID_SERVER = textwrap.dedent(
    """
    import json, sys
    for line in sys.stdin:
        req = json.loads(line)
        print(json.dumps({"id": -1, "distributions": []}), flush=True)
    """
)

ERROR_SERVER = textwrap.dedent(
    """
    import json, sys
    for line in sys.stdin:
        req = json.loads(line)
        print(json.dumps({"id": req["id"], "error": {"code": "protocol_violation",
              "message": "bad request"}}), flush=True)
    """
)

FLAKY_SERVER = textwrap.dedent(
    """
    import json, sys
    n = 0
    for line in sys.stdin:
        req = json.loads(line)
        n += 1
        p = format(0.5 + 0.001 * n, ".17g")
        q = format(0.5 - 0.001 * n, ".17g")
        dists = [[[0, p], [1, q]] for _ in req["positions"]]
        print(json.dumps({"id": req["id"], "distributions": dists}), flush=True)
    """
)


def spawn(tmp_path, code, name):
    path = tmp_path / name
    path.write_text(code)
    return BridgeSession.stdio([sys.executable, str(path)])


SAMPLING = SamplingConfig()


class UniformModel:
    """Local provider matching the uniform mock server bit for bit."""

    def __init__(self, vocab=16):
        self.ids = np.arange(vocab, dtype=np.int64)
        self.probs = np.full(vocab, float(format(1.0 / vocab, ".17g")))

    def predict(self, tokens, positions):
        return [(self.ids, self.probs) for _ in positions]


def test_round_trip_parsing(tmp_path):
    with spawn(tmp_path, UNIFORM_SERVER, "uniform.py") as session:
        dists = request_distributions(session, [-1, -1, 5], [0, 1], SAMPLING)
        assert len(dists) == 2
        ids, probs = dists[0]
        assert ids.tolist() == list(range(16))
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_empty_batch_is_valid(tmp_path):
    with spawn(tmp_path, UNIFORM_SERVER, "uniform.py") as session:
        assert request_distributions(session, [-1], [], SAMPLING) == []


def test_determinism_probe_passes_on_uniform_server(tmp_path):
    with spawn(tmp_path, UNIFORM_SERVER, "uniform.py") as session:
        probe_determinism(session, [-1, -1], [0, 1], SAMPLING)


def test_determinism_probe_catches_flaky_server(tmp_path):
    with spawn(tmp_path, FLAKY_SERVER, "flaky.py") as session:
        with pytest.raises(Nondeterminism):
            probe_determinism(session, [-1, -1], [0, 1], SAMPLING)


def test_id_mismatch_is_protocol_violation(tmp_path):
    with spawn(tmp_path, BAD_ID_SERVER, "bad_id.py") as session:
        with pytest.raises(ProtocolViolation):
            request_distributions(session, [-1], [0], SAMPLING)


def test_error_response_is_protocol_violation(tmp_path):
    with spawn(tmp_path, ERROR_SERVER, "error.py") as session:
        with pytest.raises(ProtocolViolation):
            request_distributions(session, [-1], [0], SAMPLING)


def test_dead_server_is_transport_error(tmp_path):
    session = spawn(tmp_path, "import sys; sys.exit(0)", "dead.py")
    session._process.wait(timeout=10)
    with pytest.raises(Transport):
        request_distributions(session, [-1], [0], SAMPLING)


def test_unspawnable_command_is_transport_error():
    with pytest.raises(Transport):
        BridgeSession.stdio(["/nonexistent/binary"])


def test_cross_provider_equivalence(tmp_path):
    """The pipeline must not care whether distributions arrive locally or by wire."""
    config = GenerationConfig(length=24, schedule=DenoiseSchedule(6))
    key = key_from_int(31)
    local = generate_cover(UniformModel(), key, config)
    with spawn(tmp_path, UNIFORM_SERVER, "uniform.py") as session:
        bridged = generate_cover(BridgeModel(session, SAMPLING), key, config)
    assert bridged == local


def test_session_requires_exactly_one_endpoint():
    with pytest.raises(ValueError):
        BridgeSession()
