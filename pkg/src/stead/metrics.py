"""Recovery-rate metrics, capacity/entropy accounting, and attack campaigns."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .attacks import TamperProfile, mixed_attack
from .engine import GenerationConfig, StegoResult, StepPlan, embed_message
from .extraction import extract_message, mu_window
from .prng import SteganoKey
from .sampling import MessageBitstream, bytes_to_bits
from .synthetic import SyntheticModel, SyntheticModelSpec

__all__ = [
    "CampaignResult",
    "CellStats",
    "NoRobustSteps",
    "RecoveryReport",
    "embedding_capacity",
    "empirical_kld",
    "recovery_rates",
    "robustness_margin",
    "run_campaign",
    "sequence_entropy",
]


class NoRobustSteps(ValueError):
    """The trace embedded nothing, so the robustness margin is undefined."""


@dataclass(frozen=True)
class RecoveryReport:
    """Fraction of embedded bits recovered correctly, wrongly, or not at all."""

    correct_rate: float
    wrong_rate: float
    lost_rate: float
    success: bool


def recovery_rates(embedded: str, extracted: str) -> RecoveryReport:
    """Rate triplet over the embedded payload.

    Bits beyond the compared prefix are lost: lost = 1 - min(len) / len(emb).
    Correct and wrong are match/mismatch fractions of the compared prefix,
    both relative to the embedded length, so the triplet sums to one.
    """
    n_emb = len(embedded)
    if n_emb == 0:
        raise ValueError("embedded message must be nonempty")
    n_cmp = min(len(extracted), n_emb)
    matches = sum(a == b for a, b in zip(embedded[:n_cmp], extracted[:n_cmp]))
    correct = matches / n_emb
    wrong = (n_cmp - matches) / n_emb
    lost = 1.0 - n_cmp / n_emb
    return RecoveryReport(correct, wrong, lost, success=matches == n_emb)


def embedding_capacity(result: StegoResult, length: Optional[int] = None) -> float:
    """Embedded bits per thousand generated tokens."""
    L = length if length is not None else len(result.stegotext)
    return 1000.0 * result.embedded_bit_count / L


def sequence_entropy(trace: Sequence[StepPlan], length: int) -> float:
    """Mean Shannon entropy (bits) of the sampling distribution per generated token."""
    total = 0.0
    for plan in trace:
        for dist in plan.distributions:
            p = np.asarray(dist.probs)
            total += float(-(p * np.log2(p)).sum())
    return total / length


def robustness_margin(
    trace: Sequence[StepPlan],
    alpha: float,
    beta: float,
    gamma: float,
    mu: int,
    length: int,
) -> bool:
    """Sufficient condition for exact recovery, as a checkable predicate.

    True when 2(alpha+beta+gamma) < min_s N_s / L over the robust steps and
    beta + gamma < mu / L. A true margin is a guarantee, not a tight bound:
    recovery usually survives well past it.
    """
    ns = [plan.n_unmask for plan in trace if plan.robust]
    if not ns:
        raise NoRobustSteps("trace has no robust steps")
    return 2.0 * (alpha + beta + gamma) < min(ns) / length and (beta + gamma) < mu / length


def empirical_kld(
    cover_corpus: Sequence[Sequence[int]],
    stego_corpus: Sequence[Sequence[int]],
    vocab_size: int,
) -> float:
    """Smoothed KL divergence (bits) of the stego unigram histogram from the cover's."""
    cover = np.full(vocab_size, 0.5)
    stego = np.full(vocab_size, 0.5)
    for seq in cover_corpus:
        np.add.at(cover, np.asarray(seq, dtype=np.int64), 1.0)
    for seq in stego_corpus:
        np.add.at(stego, np.asarray(seq, dtype=np.int64), 1.0)
    p = stego / stego.sum()
    q = cover / cover.sum()
    return float((p * np.log2(p / q)).sum())


@dataclass(frozen=True)
class CellStats:
    profile: TamperProfile
    trials: int
    correct_mean: float
    correct_std: float
    wrong_mean: float
    lost_mean: float
    success_rate: float
    capacity_mean: float
    entropy_mean: float
    margin: Optional[bool]

    def as_dict(self) -> dict:
        return {
            "alpha": self.profile.alpha,
            "beta_count": self.profile.beta_count,
            "gamma_count": self.profile.gamma_count,
            "trials": self.trials,
            "correct_mean": self.correct_mean,
            "correct_std": self.correct_std,
            "wrong_mean": self.wrong_mean,
            "lost_mean": self.lost_mean,
            "success_rate": self.success_rate,
            "capacity_mean": self.capacity_mean,
            "entropy_mean": self.entropy_mean,
            "margin": self.margin,
        }


@dataclass
class CampaignResult:
    cells: list[CellStats]
    master_seed: int
    trials: int

    CSV_HEADER = (
        "alpha,beta_count,gamma_count,trials,correct_mean,correct_std,"
        "wrong_mean,lost_mean,success_rate,capacity_mean,entropy_mean,margin"
    )

    def csv_rows(self) -> list[str]:
        rows = [self.CSV_HEADER]
        for c in self.cells:
            d = c.as_dict()
            rows.append(
                f"{d['alpha']},{d['beta_count']},{d['gamma_count']},{d['trials']},"
                f"{d['correct_mean']:.6f},{d['correct_std']:.6f},{d['wrong_mean']:.6f},"
                f"{d['lost_mean']:.6f},{d['success_rate']:.6f},{d['capacity_mean']:.3f},"
                f"{d['entropy_mean']:.4f},{d['margin']}"
            )
        return rows

    def as_dict(self) -> dict:
        return {
            "master_seed": self.master_seed,
            "trials": self.trials,
            "cells": [c.as_dict() for c in self.cells],
        }


def _derive32(master_seed: int, *tags: int) -> bytes:
    block = master_seed.to_bytes(8, "big") + b"".join(t.to_bytes(4, "big") for t in tags)
    return hashlib.sha256(block).digest()


def run_trial(
    profile: TamperProfile,
    spec: SyntheticModelSpec,
    config: GenerationConfig,
    message_bits: int,
    master_seed: int,
    cell_index: int,
    trial_index: int,
) -> tuple[RecoveryReport, StegoResult]:
    """One embed -> attack -> extract round, fully determined by the seeds."""
    model = SyntheticModel(spec)
    key = SteganoKey(_derive32(master_seed, cell_index, trial_index, 0))
    payload = bytes_to_bits(_derive32(master_seed, cell_index, trial_index, 1) * 8)[:message_bits]
    attack_seed = int.from_bytes(_derive32(master_seed, cell_index, trial_index, 2)[:8], "big")

    result = embed_message(model, key, config, MessageBitstream.from_payload_bits(payload))
    seeded = TamperProfile(profile.alpha, profile.beta_count, profile.gamma_count, attack_seed)
    tampered = mixed_attack(result.stegotext, seeded, spec.vocab_size)
    report = extract_message(model, key, config, tampered)
    return recovery_rates(payload, report.message), result


def run_campaign(
    grid: Sequence[TamperProfile],
    trials: int,
    spec: SyntheticModelSpec,
    config: GenerationConfig,
    message_bits: int = 128,
    master_seed: int = 0,
) -> CampaignResult:
    """Embed/attack/extract `trials` times per grid cell and aggregate the rates.

    Per-trial keys, payloads, and attack seeds all derive from the master seed,
    so a campaign is reproducible from one integer.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    cells = []
    for ci, profile in enumerate(grid):
        correct = np.empty(trials)
        wrong = np.empty(trials)
        lost = np.empty(trials)
        successes = 0
        capacity = np.empty(trials)
        entropy = np.empty(trials)
        beta = profile.beta_count / config.length
        gamma = profile.gamma_count / config.length
        mu = mu_window(
            config.length, config.length + profile.beta_count - profile.gamma_count
        )
        # a cell's margin holds only if it holds for every trial's trace
        margin: Optional[bool] = True
        for ti in range(trials):
            rates, result = run_trial(
                profile, spec, config, message_bits, master_seed, ci, ti
            )
            correct[ti], wrong[ti], lost[ti] = (
                rates.correct_rate,
                rates.wrong_rate,
                rates.lost_rate,
            )
            successes += rates.success
            capacity[ti] = embedding_capacity(result)
            entropy[ti] = sequence_entropy(result.trace, config.length)
            if margin:
                try:
                    margin = margin and robustness_margin(
                        result.trace, profile.alpha, beta, gamma, mu, config.length
                    )
                except NoRobustSteps:
                    margin = None
        cells.append(
            CellStats(
                profile=profile,
                trials=trials,
                correct_mean=float(correct.mean()),
                correct_std=float(correct.std()),
                wrong_mean=float(wrong.mean()),
                lost_mean=float(lost.mean()),
                success_rate=successes / trials,
                capacity_mean=float(capacity.mean()),
                entropy_mean=float(entropy.mean()),
                margin=margin,
            )
        )
    return CampaignResult(cells=cells, master_seed=master_seed, trials=trials)
