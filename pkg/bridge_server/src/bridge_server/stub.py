"""Deterministic keyed-hash distribution backend.

Produces the same distributions as the client side's synthetic test model:
logits are concentration-scaled keyed uniforms derived from (seed, a sha256
fingerprint of the whole sequence, position), pushed through a softmax. Kept
in bit-exact lockstep with that construction so stego generated over the wire
matches stego generated in-process.
"""

from __future__ import annotations

import hashlib
from typing import Sequence

import numpy as np

MASK = -1

_GOLD = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = (np.uint64(s) for s in (30, 27, 31, 11))
_INV_2_53 = 2.0 ** -53


class StubModel:
    """Distribution provider with no model weights behind it."""

    def __init__(self, seed: bytes = bytes(32), vocab_size: int = 256, concentration: float = 4.0):
        if len(seed) != 32:
            raise ValueError("seed must be 32 bytes")
        if vocab_size < 8:
            raise ValueError("vocab_size must be at least 8")
        if concentration <= 0:
            raise ValueError("concentration must be positive")
        self.seed = seed
        self.vocab_size = vocab_size
        self.concentration = concentration
        self._vocab = np.arange(vocab_size, dtype=np.uint64)

    def distributions(
        self, sequence: Sequence[int], positions: Sequence[int]
    ) -> list[list[tuple[int, float]]]:
        """Per-position (token_id, probability) lists, probabilities descending."""
        if not positions:
            return []
        fingerprint = hashlib.sha256(np.asarray(sequence, dtype=np.int64).tobytes()).digest()
        prefix = self.seed + fingerprint
        digests = [
            hashlib.sha256(prefix + int(pos).to_bytes(4, "big")).digest()
            for pos in positions
        ]
        k0 = np.array([int.from_bytes(d[:8], "big") for d in digests], dtype=np.uint64)
        k1 = np.array([int.from_bytes(d[8:16], "big") for d in digests], dtype=np.uint64)
        with np.errstate(over="ignore"):
            x = k0[:, None] + self._vocab[None, :] * _GOLD
            x ^= k1[:, None]
            x = (x ^ (x >> _S30)) * _MIX1
            x = (x ^ (x >> _S27)) * _MIX2
            x ^= x >> _S31
        u = (x >> _S11).astype(np.float64) * _INV_2_53
        logits = self.concentration * u
        logits -= logits.max(axis=1, keepdims=True)
        probs = np.exp(logits)
        probs /= probs.sum(axis=1, keepdims=True)

        out = []
        for row in probs:
            order = np.argsort(-row, kind="stable")
            out.append([(int(t), float(row[t])) for t in order])
        return out
