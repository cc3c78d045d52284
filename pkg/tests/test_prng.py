"""Keyed uniform stream: determinism, addressing, and statistical quality."""

import pytest
from scipy import stats

from stead.prng import PrnRole, SteganoKey, derive_uniform, mask_uniforms, token_uniform

KEY = SteganoKey(bytes(range(32)))


def test_key_must_be_32_bytes():
    with pytest.raises(ValueError):
        SteganoKey(b"short")
    with pytest.raises(ValueError):
        SteganoKey(bytes(33))


def test_hex_round_trip():
    assert SteganoKey.from_hex(KEY.hex()).key_bytes == KEY.key_bytes
    with pytest.raises(ValueError):
        SteganoKey.from_hex("ab" * 31)


def test_determinism():
    a = derive_uniform(KEY, 3, 7, PrnRole.MaskDecision)
    b = derive_uniform(KEY, 3, 7, PrnRole.MaskDecision)
    assert a == b


def test_role_separation():
    assert derive_uniform(KEY, 3, 7, PrnRole.MaskDecision) != derive_uniform(
        KEY, 3, 7, PrnRole.TokenSample
    )


def test_distinct_indices_distinct_values():
    values = {
        derive_uniform(KEY, s, p, r)
        for s in range(10)
        for p in range(10)
        for r in PrnRole
    }
    assert len(values) == 200


def test_range_and_resolution():
    for i in range(200):
        u = derive_uniform(KEY, 0, i, PrnRole.TokenSample)
        assert 0.0 <= u < 1.0
        # exactly 53 bits of resolution: scaling by 2**53 recovers an integer
        assert float(u * 2.0**53).is_integer()


def test_index_bounds():
    with pytest.raises(ValueError):
        derive_uniform(KEY, 2**32, 0, PrnRole.MaskDecision)
    with pytest.raises(ValueError):
        derive_uniform(KEY, 0, -1, PrnRole.MaskDecision)


def test_random_access_equals_sequential():
    positions = list(range(50))
    forward = mask_uniforms(KEY, 5, positions)
    backward = list(reversed(mask_uniforms(KEY, 5, positions[::-1])))
    pointwise = [derive_uniform(KEY, 5, p, PrnRole.MaskDecision) for p in positions]
    assert forward == backward == pointwise
    assert token_uniform(KEY, 5, 9) == derive_uniform(KEY, 5, 9, PrnRole.TokenSample)


def test_empirical_mean():
    n = 1_000_000
    total = 0.0
    # spread over steps and positions, one role
    for s in range(10):
        total += sum(mask_uniforms(KEY, s, list(range(n // 10))))
    assert abs(total / n - 0.5) < 0.002


def test_kolmogorov_smirnov_uniformity():
    draws = mask_uniforms(KEY, 0, list(range(100_000)))
    result = stats.kstest(draws, "uniform")
    assert result.pvalue > 0.01


def test_avalanche_on_key_change():
    flipped = bytearray(KEY.key_bytes)
    flipped[11] ^= 0x01
    other = SteganoKey(bytes(flipped))
    n = 10_000
    diff_bits = 0
    for i in range(n):
        a = int(derive_uniform(KEY, 1, i, PrnRole.TokenSample) * 2.0**53)
        b = int(derive_uniform(other, 1, i, PrnRole.TokenSample) * 2.0**53)
        diff_bits += bin(a ^ b).count("1")
    assert diff_bits / (53 * n) >= 0.49
