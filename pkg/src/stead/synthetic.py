"""Deterministic keyed toy model standing in for a real masked-diffusion LM.

Distributions are a softmax over keyed pseudo-random logits derived from the
model seed, a fingerprint of the entire current sequence, and the position.
Conditioning on the whole-sequence fingerprint makes a single wrong token
perturb every later distribution, which is the error-propagation behaviour a
robust extractor has to survive.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = ["SyntheticModel", "SyntheticModelSpec"]

_GOLD = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV_2_53 = 2.0 ** -53


@dataclass(frozen=True)
class SyntheticModelSpec:
    """Identity and shape of the toy model.

    concentration scales the random logits: near zero the distributions are
    almost uniform (high min-entropy, large capacities); large values make
    them peaked enough that capacities collapse to zero.
    """

    model_seed: bytes = bytes(32)
    vocab_size: int = 256
    concentration: float = 4.0

    def __post_init__(self) -> None:
        if len(self.model_seed) != 32:
            raise ValueError("model_seed must be 32 bytes")
        if self.vocab_size < 8:
            raise ValueError("vocab_size must be at least 8")
        if self.concentration <= 0:
            raise ValueError("concentration must be positive")

    @classmethod
    def from_hex(cls, hex_seed: str, vocab_size: int = 256, concentration: float = 4.0) -> "SyntheticModelSpec":
        return cls(bytes.fromhex(hex_seed), vocab_size, concentration)


_S30, _S27, _S31, _S11 = (np.uint64(s) for s in (30, 27, 31, 11))


def _keyed_unit_rows(digests: list[bytes], vocab_ids: np.ndarray) -> np.ndarray:
    """(P, V) matrix of uniform values, one row per 32-byte digest (splitmix mix)."""
    k0 = np.array([int.from_bytes(d[:8], "big") for d in digests], dtype=np.uint64)
    k1 = np.array([int.from_bytes(d[8:16], "big") for d in digests], dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = k0[:, None] + vocab_ids[None, :] * _GOLD
        x ^= k1[:, None]
        x = (x ^ (x >> _S30)) * _MIX1
        x = (x ^ (x >> _S27)) * _MIX2
        x ^= x >> _S31
    return (x >> _S11).astype(np.float64) * _INV_2_53


class SyntheticModel:
    """Distribution provider over an opaque integer vocabulary."""

    def __init__(self, spec: SyntheticModelSpec):
        self.spec = spec
        self._vocab_ids = np.arange(spec.vocab_size, dtype=np.uint64)
        self._token_ids = np.arange(spec.vocab_size, dtype=np.int64)

    def fingerprint(self, tokens: Sequence[int]) -> bytes:
        """Canonical hash of the token list, mask sentinel included."""
        return hashlib.sha256(np.asarray(tokens, dtype=np.int64).tobytes()).digest()

    def predict(
        self, tokens: Sequence[int], positions: Sequence[int]
    ) -> list[tuple[np.ndarray, np.ndarray]]:
        """Raw per-position distributions conditioned on the current sequence."""
        if not positions:
            return []
        fp = self.fingerprint(tokens)
        prefix = self.spec.model_seed + fp
        digests = []
        for pos in positions:
            if tokens[pos] != -1:
                raise ValueError(f"position {pos} is not masked")
            digests.append(hashlib.sha256(prefix + int(pos).to_bytes(4, "big")).digest())
        logits = self.spec.concentration * _keyed_unit_rows(digests, self._vocab_ids)
        logits -= logits.max(axis=1, keepdims=True)
        probs = np.exp(logits)
        probs /= probs.sum(axis=1, keepdims=True)
        token_ids = self._token_ids
        return [(token_ids, probs[i]) for i in range(len(positions))]
