"""Keyed counter-mode source of uniform floats, randomly addressable by (step, position, role).

Sender and receiver hold the same 32-byte key and must see bit-identical
values for every index tuple, in any evaluation order. A keyed BLAKE2b call
per index gives that: no generator state, O(1) random access, and the same
result on every platform. The top 53 bits of the digest are mapped to [0, 1)
by division by 2**53.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from enum import IntEnum

__all__ = ["PrnRole", "SteganoKey", "derive_uniform", "mask_uniforms", "token_uniform"]

_BLOCK = struct.Struct(">IIB")
_INV_2_53 = 2.0 ** -53


class PrnRole(IntEnum):
    """Which of the two per-position pseudo-random streams is addressed."""

    MaskDecision = 0  # keep-mask / unmask coin for a step
    TokenSample = 1   # token-sampling uniform for an unmasked position


@dataclass(frozen=True)
class SteganoKey:
    """Shared secret seeding both pseudo-random streams.

    key_bytes must be exactly 32 bytes (the nominal 256-bit security
    parameter); distinct keys give computationally unrelated streams.
    """

    key_bytes: bytes
    security_parameter: int = 256
    # pre-keyed hasher, copied per derivation; excluded from equality/hash
    _hasher: hashlib.blake2b = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.key_bytes) != 32:
            raise ValueError(f"key must be 32 bytes, got {len(self.key_bytes)}")
        if self.security_parameter <= 0:
            raise ValueError("security_parameter must be positive")
        object.__setattr__(
            self, "_hasher", hashlib.blake2b(key=self.key_bytes, digest_size=8)
        )

    @classmethod
    def from_hex(cls, hex_key: str) -> "SteganoKey":
        raw = bytes.fromhex(hex_key)
        if len(raw) != 32:
            raise ValueError("hex key must encode exactly 32 bytes (64 hex chars)")
        return cls(raw)

    def hex(self) -> str:
        return self.key_bytes.hex()


def derive_uniform(key: SteganoKey, step_index: int, position: int, role: PrnRole) -> float:
    """Uniform value in [0, 1) for one (step, position, role) index; pure and total.

    Indices are limited to 32 bits each, which the input block encoding relies on.
    """
    if not 0 <= step_index < 2**32 or not 0 <= position < 2**32:
        raise ValueError("step_index and position must fit in 32 bits")
    h = key._hasher.copy()
    h.update(_BLOCK.pack(step_index, position, int(role)))
    word = int.from_bytes(h.digest(), "big")
    return (word >> 11) * _INV_2_53


def mask_uniforms(key: SteganoKey, step_index: int, positions: list[int]) -> list[float]:
    """MaskDecision uniforms for many positions of one step.

    Exactly equivalent to calling derive_uniform per position; exists because
    the denoising loop draws one coin per masked position per step and this
    loop sits on the hot path of both endpoints.
    """
    copy = key._hasher.copy
    pack = _BLOCK.pack
    from_bytes = int.from_bytes
    out = []
    append = out.append
    for pos in positions:
        h = copy()
        h.update(pack(step_index, pos, 0))
        append((from_bytes(h.digest(), "big") >> 11) * _INV_2_53)
    return out


def token_uniform(key: SteganoKey, step_index: int, position: int) -> float:
    """TokenSample uniform for one position (shorthand used by both endpoints)."""
    h = key._hasher.copy()
    h.update(_BLOCK.pack(step_index, position, 1))
    return (int.from_bytes(h.digest(), "big") >> 11) * _INV_2_53
