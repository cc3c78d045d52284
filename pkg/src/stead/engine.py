"""Sender-side reverse denoising loop with repetition-coded message embedding.

Each step draws one keyed coin per still-masked position to decide unmasking,
queries the model for the unmasked positions' distributions, computes the
shared per-step capacity, and embeds the same message fragment at every
position of a robust step. With an empty message the loop degenerates to pure
pseudo-random generation, which is exactly the cover process.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .prng import SteganoKey, mask_uniforms, token_uniform
from .sampling import (
    AllMassTruncated,
    CategoricalDistribution,
    Framing,
    MessageBitstream,
    SamplingConfig,
    canonicalize,
    embed_token,
    step_capacity,
)

__all__ = [
    "MASK",
    "DenoiseSchedule",
    "DistributionProvider",
    "GenerationConfig",
    "ModelFault",
    "StegoResult",
    "StepPlan",
    "embed_message",
    "generate_cover",
    "plan_step",
]

MASK = -1


class ModelFault(RuntimeError):
    """The distribution provider returned a malformed response."""


class DistributionProvider(Protocol):
    """Anything that yields raw per-position distributions for masked positions."""

    def predict(
        self, tokens: Sequence[int], positions: Sequence[int]
    ) -> list[tuple[np.ndarray, np.ndarray]]:
        """Raw (token_ids, probabilities) arrays for each requested position."""
        ...


@dataclass(frozen=True)
class DenoiseSchedule:
    """Uniform discretization of the reverse process into total_steps steps.

    Step k runs from t = (T-k)/T down to s = (T-k-1)/T; the final step has
    s = 0, which forces every remaining masked position to unmask.
    """

    total_steps: int

    def __post_init__(self) -> None:
        if self.total_steps < 1:
            raise ValueError("total_steps must be positive")

    @property
    def timesteps(self) -> list[float]:
        T = self.total_steps
        return [(T - k) / T for k in range(T + 1)]

    def bounds(self, k: int) -> tuple[float, float]:
        """(t, s) pair for step index k."""
        T = self.total_steps
        if not 0 <= k < T:
            raise ValueError(f"step index {k} outside schedule of {T} steps")
        return (T - k) / T, (T - k - 1) / T


@dataclass(frozen=True)
class GenerationConfig:
    """Everything both endpoints must agree on besides the key."""

    length: int
    schedule: DenoiseSchedule
    sampling: SamplingConfig = SamplingConfig()
    context: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.length < 1:
            raise ValueError("length must be positive")
        if any(t == MASK for t in self.context):
            raise ValueError("context must not contain the mask sentinel")


@dataclass
class StepPlan:
    """One step's unmask decisions, distributions, and shared capacity."""

    step_index: int
    t: float
    s: float
    unmask_positions: list[int]
    distributions: list[CategoricalDistribution]
    n_unmask: int
    capacity: int
    robust: bool


@dataclass
class StegoResult:
    stegotext: list[int]
    embedded_bit_count: int
    trace: list[StepPlan] = field(repr=False)


def plan_step(
    region: Sequence[int],
    k: int,
    key: SteganoKey,
    model: DistributionProvider,
    config: GenerationConfig,
) -> StepPlan:
    """Decide which masked positions unmask at step k and fetch their distributions.

    `region` is the generated region only (length L, mask sentinel for pending
    positions); the model sees context + region and absolute positions.
    """
    t, s = config.schedule.bounds(k)
    threshold = s / t
    masked = [i for i, tok in enumerate(region) if tok == MASK]
    coins = mask_uniforms(key, k, masked)
    unmask = [i for i, u in zip(masked, coins) if u >= threshold]

    dists: list[CategoricalDistribution] = []
    if unmask:
        ctx = len(config.context)
        full = list(config.context) + list(region)
        raws = model.predict(full, [ctx + i for i in unmask])
        if len(raws) != len(unmask):
            raise ModelFault(
                f"provider returned {len(raws)} distributions for {len(unmask)} positions"
            )
        try:
            dists = [canonicalize(raw, config.sampling) for raw in raws]
        except AllMassTruncated as exc:
            raise ModelFault(f"malformed distribution from provider: {exc}") from exc

    ell = step_capacity(dists, len(unmask))
    return StepPlan(
        step_index=k,
        t=t,
        s=s,
        unmask_positions=unmask,
        distributions=dists,
        n_unmask=len(unmask),
        capacity=ell,
        robust=len(unmask) >= 3 and ell >= 1,
    )


def embed_message(
    model: DistributionProvider,
    key: SteganoKey,
    config: GenerationConfig,
    message: MessageBitstream,
) -> StegoResult:
    """Run the full reverse process, embedding message bits at robust steps.

    At a robust step with unread bits, one capacity-sized fragment is read
    (zero-padded at the tail) and embedded identically at every unmasked
    position; all other positions are plainly pseudo-randomly sampled. Bits
    beyond the total capacity are simply not embedded.
    """
    region = [MASK] * config.length
    trace: list[StepPlan] = []
    consumed = 0

    for k in range(config.schedule.total_steps):
        plan = plan_step(region, k, key, model, config)
        fragment = ""
        if plan.robust and message.remaining() > 0:
            fragment, real = message.read(plan.capacity)
            consumed += real
        for pos, dist in zip(plan.unmask_positions, plan.distributions):
            region[pos] = embed_token(dist, token_uniform(key, k, pos), fragment)
        trace.append(plan)

    if MASK in region:
        raise RuntimeError("schedule finished with masked positions remaining")
    return StegoResult(stegotext=region, embedded_bit_count=consumed, trace=trace)


def generate_cover(
    model: DistributionProvider, key: SteganoKey, config: GenerationConfig
) -> list[int]:
    """Pure pseudo-random generation: the embedding loop with nothing to embed."""
    empty = MessageBitstream("", 0, Framing.Raw)
    return embed_message(model, key, config, empty).stegotext
