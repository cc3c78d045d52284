"""Distribution canonicalization and message-driven pseudo-random sampling.

A canonical distribution is an ordered token support with half-open cumulative
intervals partitioning [0, 1). Sampling with a uniform r picks the interval
containing r; embedding offsets r by dec(m)/2**l modulo 1 so the message picks
among distribution-faithful outcomes without changing their probabilities;
extraction inverts the offset and fails loudly for unreachable tokens.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "AllMassTruncated",
    "CategoricalDistribution",
    "ExtractFailure",
    "Framing",
    "MessageBitstream",
    "SamplingConfig",
    "UnknownToken",
    "bits_to_bytes",
    "bytes_to_bits",
    "canonicalize",
    "capacity_bits",
    "embed_token",
    "extract_bits",
    "offset_prn",
    "sample_token",
    "step_capacity",
]


class AllMassTruncated(ValueError):
    """No support entry survived truncation; the model output was malformed."""


class ExtractFailure(Exception):
    """No message offset reaches the observed token: tampering or misalignment."""


class UnknownToken(ExtractFailure):
    """The observed token is not in the distribution support at all."""


@dataclass(frozen=True)
class SamplingConfig:
    """Truncation parameters applied identically on both endpoints.

    top_k = 0 disables the top-k cut; top_p = 1.0 keeps the full support.
    """

    temperature: float = 1.0
    top_p: float = 1.0
    top_k: int = 0

    def __post_init__(self) -> None:
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must lie in (0, 1]")
        if self.top_k < 0:
            raise ValueError("top_k must be non-negative")


class CategoricalDistribution:
    """Canonically ordered token support with half-open cumulative intervals.

    Entry k owns [cum[k-1], cum[k]); the last right edge is pinned to 1.0 so
    the intervals partition [0, 1). Ordering is probability descending with
    ascending token id as the tiebreak, and both endpoints must build it from
    identical inputs for interval membership to agree bit-for-bit.
    """

    __slots__ = ("token_ids", "probs", "cum", "_index")

    def __init__(self, token_ids: Sequence[int], probs: Sequence[float], cum: Sequence[float]):
        self.token_ids = list(token_ids)
        self.probs = list(probs)
        self.cum = list(cum)
        self._index: Optional[dict[int, int]] = None

    def __len__(self) -> int:
        return len(self.token_ids)

    def __repr__(self) -> str:
        head = ", ".join(
            f"{t}:{p:.4f}" for t, p in zip(self.token_ids[:4], self.probs[:4])
        )
        more = ", ..." if len(self.token_ids) > 4 else ""
        return f"CategoricalDistribution({head}{more})"

    @property
    def max_prob(self) -> float:
        return self.probs[0]

    def entries(self) -> list[tuple[int, float]]:
        return list(zip(self.token_ids, self.probs))

    def index_of(self, token_id: int) -> Optional[int]:
        if self._index is None:
            self._index = {t: k for k, t in enumerate(self.token_ids)}
        return self._index.get(token_id)

    def interval(self, token_id: int) -> tuple[float, float]:
        """Half-open interval [left, right) of a support token."""
        k = self.index_of(token_id)
        if k is None:
            raise UnknownToken(f"token {token_id} not in support")
        left = self.cum[k - 1] if k > 0 else 0.0
        return left, self.cum[k]


def canonicalize(
    raw: Sequence[tuple[int, float]] | tuple[np.ndarray, np.ndarray],
    config: SamplingConfig = SamplingConfig(),
) -> CategoricalDistribution:
    """Temperature, top-k and top-p truncation, renormalization, canonical order.

    Accepts either a list of (token_id, probability) pairs or a pre-split
    (ids array, probs array) pair. Zero-probability entries are dropped before
    truncation; raises AllMassTruncated when nothing survives.
    """
    if isinstance(raw, tuple) and len(raw) == 2 and isinstance(raw[0], np.ndarray):
        ids = np.asarray(raw[0], dtype=np.int64)
        probs = np.asarray(raw[1], dtype=np.float64)
    else:
        if len(raw) == 0:
            raise AllMassTruncated("empty raw distribution")
        ids = np.fromiter((t for t, _ in raw), dtype=np.int64, count=len(raw))
        probs = np.fromiter((p for _, p in raw), dtype=np.float64, count=len(raw))

    if probs.size == 0:
        raise AllMassTruncated("empty raw distribution")
    lo = float(probs.min())
    if not lo >= 0.0 or not np.isfinite(float(probs.max())):  # NaN compares false
        raise AllMassTruncated("negative or non-finite probabilities")
    if lo == 0.0:
        keep = probs > 0.0
        if not keep.any():
            raise AllMassTruncated("no entry with positive probability")
        ids, probs = ids[keep], probs[keep]

    # temperature acts on log-probabilities: p -> p^(1/T), renormalized
    if config.temperature != 1.0:
        probs = probs ** (1.0 / config.temperature)

    # canonical order first; the top-k and nucleus cuts are prefixes of it
    order = np.lexsort((ids, -probs))
    ids, probs = ids[order], probs[order]

    if config.top_k and config.top_k < ids.size:
        ids, probs = ids[: config.top_k], probs[: config.top_k]

    cum = np.cumsum(probs)
    if config.top_p < 1.0:
        # smallest prefix whose renormalized mass reaches top_p
        target = config.top_p * cum[-1]
        k = int(np.searchsorted(cum, target, side="left")) + 1
        ids, probs, cum = ids[:k], probs[:k], cum[:k]

    probs = probs / cum[-1]
    out_cum = np.cumsum(probs)
    out_cum[-1] = 1.0  # pin the partition's right edge exactly
    return CategoricalDistribution(ids.tolist(), probs.tolist(), out_cum.tolist())


def sample_token(dist: CategoricalDistribution, r: float) -> int:
    """Token whose half-open interval contains r."""
    return dist.token_ids[bisect_right(dist.cum, r)]


def offset_prn(r: float, m: str) -> float:
    """Message-driven PRN: [r + dec(m)/2**l] mod 1 for an l-bit message string."""
    ell = len(m)
    if ell < 1:
        raise ValueError("message must contain at least one bit")
    return (r + int(m, 2) / (1 << ell)) % 1.0


def embed_token(dist: CategoricalDistribution, r: float, m: str = "") -> int:
    """Sample driven by message bits; with an empty message this is plain sampling."""
    if not m:
        return dist.token_ids[bisect_right(dist.cum, r)]
    return dist.token_ids[bisect_right(dist.cum, offset_prn(r, m))]


def extract_bits(dist: CategoricalDistribution, r: float, token: int, ell: int) -> str:
    """Invert embed_token: the unique l-bit m whose offset lands in token's interval.

    Raises UnknownToken for out-of-support tokens and ExtractFailure when no
    message offset reaches the token (the error localization property).
    """
    if ell < 1:
        raise ValueError("ell must be at least 1")
    k = dist.index_of(token)
    if k is None:
        raise UnknownToken(f"token {token} not in support")
    left = dist.cum[k - 1] if k > 0 else 0.0
    right = dist.cum[k]
    span = 1 << ell
    for value in range(span):
        v = (r + value / span) % 1.0
        if left <= v < right:
            return format(value, f"0{ell}b")
    raise ExtractFailure(f"token {token} unreachable from any {ell}-bit offset")


def capacity_bits(max_prob: float) -> int:
    """Conflict-free capacity of one distribution: floor(-log2(max p)).

    Guarded against rounding in the logarithm: if max p marginally exceeds
    2**-l the result is decremented so offset points stay in distinct intervals.
    """
    if max_prob >= 1.0:
        return 0
    ell = int(math.floor(-math.log2(max_prob)))
    if ell > 0 and max_prob > 2.0 ** -ell:
        ell -= 1
    return ell


def step_capacity(dists: Sequence[CategoricalDistribution], n_unmask: int) -> int:
    """Shared per-step capacity: min over positions, zero below three positions.

    Zero is also returned when any position's own capacity is zero (its top
    probability exceeds one half), since every position must carry the bits.
    """
    if len(dists) != n_unmask:
        raise ValueError("n_unmask must equal the number of distributions")
    if n_unmask < 3:
        return 0
    ell = min(capacity_bits(d.max_prob) for d in dists)
    return max(ell, 0)


class Framing(Enum):
    Raw = "raw"
    LengthPrefixed32 = "length-prefixed-32"


def bytes_to_bits(data: bytes) -> str:
    """Bit string of a byte payload, most-significant bit first within each byte."""
    return "".join(format(b, "08b") for b in data)


def bits_to_bytes(bits: str) -> bytes:
    """Pack bits (MSB first) into bytes, zero-padding a trailing partial byte."""
    if not bits:
        return b""
    pad = (-len(bits)) % 8
    padded = bits + "0" * pad
    return bytes(int(padded[i : i + 8], 2) for i in range(0, len(padded), 8))


@dataclass
class MessageBitstream:
    """Framed secret payload with a read cursor.

    In LengthPrefixed32 mode the first 32 bits carry the payload bit-length,
    big-endian, so the receiver knows when to stop attributing decoded bits.
    """

    bits: str = ""
    cursor: int = 0
    framing: Framing = Framing.LengthPrefixed32

    def __post_init__(self) -> None:
        if self.bits.strip("01"):
            raise ValueError("bits must contain only '0' and '1'")
        if not 0 <= self.cursor <= len(self.bits):
            raise ValueError("cursor out of range")

    @classmethod
    def from_payload_bits(cls, payload: str, framing: Framing = Framing.LengthPrefixed32) -> "MessageBitstream":
        if framing is Framing.LengthPrefixed32:
            if len(payload) >= 1 << 32:
                raise ValueError("payload too long for a 32-bit length prefix")
            return cls(format(len(payload), "032b") + payload, 0, framing)
        return cls(payload, 0, framing)

    @classmethod
    def from_bytes(cls, data: bytes, framing: Framing = Framing.LengthPrefixed32) -> "MessageBitstream":
        return cls.from_payload_bits(bytes_to_bits(data), framing)

    @property
    def payload_bits(self) -> str:
        if self.framing is Framing.LengthPrefixed32:
            return self.bits[32:]
        return self.bits

    def remaining(self) -> int:
        return len(self.bits) - self.cursor

    def read(self, n: int) -> tuple[str, int]:
        """Next n bits zero-padded past the end; returns (bits, real bit count)."""
        chunk = self.bits[self.cursor : self.cursor + n]
        real = len(chunk)
        self.cursor += real
        return chunk + "0" * (n - real), real
