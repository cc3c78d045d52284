"""Stub backend: determinism, conditioning, and distribution validity."""

import pytest

from bridge_server.stub import StubModel


def test_determinism():
    a = StubModel().distributions([-1, 3, -1], [0, 2])
    b = StubModel().distributions([-1, 3, -1], [0, 2])
    assert a == b


def test_sequence_conditioning():
    stub = StubModel()
    a = stub.distributions([-1, 3, -1], [0])
    b = stub.distributions([-1, 4, -1], [0])
    assert a != b


def test_seed_conditioning():
    a = StubModel(seed=bytes(32)).distributions([-1], [0])
    b = StubModel(seed=bytes(31) + b"\x01").distributions([-1], [0])
    assert a != b


def test_distribution_validity():
    for dist in StubModel(vocab_size=64).distributions([-1, -1], [0, 1]):
        probs = [p for _, p in dist]
        tokens = sorted(t for t, _ in dist)
        assert tokens == list(range(64))
        assert all(p > 0 for p in probs)
        assert abs(sum(probs) - 1.0) < 1e-9
        assert probs == sorted(probs, reverse=True)


def test_concentration_sharpens():
    flat = StubModel(concentration=0.1).distributions([-1], [0])[0]
    sharp = StubModel(concentration=64.0).distributions([-1], [0])[0]
    assert sharp[0][1] > flat[0][1]


def test_parameter_validation():
    with pytest.raises(ValueError):
        StubModel(seed=b"short")
    with pytest.raises(ValueError):
        StubModel(vocab_size=2)
    with pytest.raises(ValueError):
        StubModel(concentration=0.0)


def test_empty_positions():
    assert StubModel().distributions([-1], []) == []
