"""Bounded tampering functions and membership checking for the threat model.

Attacks are deterministic given their seed. Substitution, insertion, and
deletion counts are always taken against the original sequence length, and
every composite attack stays inside its declared bounds by construction.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Sequence

__all__ = [
    "TamperProfile",
    "delete",
    "insert",
    "mixed_attack",
    "substitute",
    "substitute_outside_batches",
    "verify_bound",
]


@dataclass(frozen=True)
class TamperProfile:
    """Attack intensity: substitution fraction plus absolute insert/delete counts."""

    alpha: float = 0.0
    beta_count: int = 0
    gamma_count: int = 0
    attack_seed: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.alpha <= 1:
            raise ValueError("alpha must lie in [0, 1]")
        if self.beta_count < 0 or self.gamma_count < 0:
            raise ValueError("insertion and deletion counts must be non-negative")


def substitute(seq: Sequence[int], alpha: float, rng_seed: int, vocab_size: int) -> list[int]:
    """Replace floor(alpha * L) distinct positions with random tokens != original."""
    out = list(seq)
    count = math.floor(alpha * len(out))
    if count == 0:
        return out
    rng = random.Random(rng_seed)
    for pos in rng.sample(range(len(out)), count):
        # uniform over the vocab minus the original token
        draw = rng.randrange(vocab_size - 1)
        out[pos] = draw if draw < out[pos] else draw + 1
    return out


def insert(seq: Sequence[int], count: int, rng_seed: int, vocab_size: int) -> list[int]:
    """Insert `count` uniform random tokens at uniform random indices."""
    out = list(seq)
    rng = random.Random(rng_seed)
    for _ in range(count):
        out.insert(rng.randrange(len(out) + 1), rng.randrange(vocab_size))
    return out


def delete(seq: Sequence[int], count: int, rng_seed: int) -> list[int]:
    """Delete `count` tokens at uniform random indices."""
    if count > len(seq):
        raise ValueError("cannot delete more tokens than the sequence holds")
    out = list(seq)
    rng = random.Random(rng_seed)
    for _ in range(count):
        out.pop(rng.randrange(len(out)))
    return out


def mixed_attack(seq: Sequence[int], profile: TamperProfile, vocab_size: int) -> list[int]:
    """Substitutions, then insertions, then deletions, all counted against len(seq)."""
    rng = random.Random(profile.attack_seed)
    out = substitute(seq, profile.alpha, rng.getrandbits(64), vocab_size)
    out = insert(out, profile.beta_count, rng.getrandbits(64), vocab_size)
    out = delete(out, profile.gamma_count, rng.getrandbits(64))
    return out


def substitute_outside_batches(
    seq: Sequence[int],
    count: int,
    batches: Sequence[Sequence[int]],
    rng_seed: int,
    vocab_size: int,
) -> list[int]:
    """Random substitutions with fewer than half of each given batch touched.

    Harness helper for robustness-bound experiments where the per-step
    substitution load is assumed bounded: positions are drawn uniformly but
    redrawn whenever a batch would reach ceil(n/2) substitutions.
    """
    out = list(seq)
    batch_of = {pos: bi for bi, batch in enumerate(batches) for pos in batch}
    budget = {bi: (len(batch) - 1) // 2 for bi, batch in enumerate(batches)}
    rng = random.Random(rng_seed)
    chosen: set[int] = set()
    attempts = 0
    while len(chosen) < count:
        attempts += 1
        if attempts > 1000 * (count + 1):
            raise ValueError("cannot place substitutions under the per-batch bound")
        pos = rng.randrange(len(out))
        if pos in chosen:
            continue
        bi = batch_of.get(pos)
        if bi is not None:
            if budget[bi] == 0:
                continue
            budget[bi] -= 1
        chosen.add(pos)
    for pos in chosen:
        draw = rng.randrange(vocab_size - 1)
        out[pos] = draw if draw < out[pos] else draw + 1
    return out


def verify_bound(
    x: Sequence[int], y: Sequence[int], alpha: float, beta: float, gamma: float
) -> bool:
    """Whether y is reachable from x within the fractional tampering bounds.

    Searches for any edit decomposition with at most floor(alpha*L)
    substitutions, floor(beta*L) insertions, and floor(gamma*L) deletions,
    where L = len(x). A plain minimal-edit backtrace is not enough here: one
    substitution trades against an insert/delete pair, so the bounded
    decomposition is found by dynamic programming over (insertions, deletions)
    budgets with minimal substitutions as the value.
    """
    L, Lp = len(x), len(y)
    smax = math.floor(alpha * L)
    imax = min(math.floor(beta * L), Lp)
    dmax = min(math.floor(gamma * L), L)
    if Lp - L > imax or L - Lp > dmax:
        return False
    if smax >= min(L, Lp):
        return True  # substitute everything, pad with inserts/deletes

    # frontier after consuming i tokens of x: (ins, del) -> fewest substitutions
    frontier: dict[tuple[int, int], int] = {(0, 0): 0}
    for i in range(L + 1):
        # closure over insertions, which consume y but not x
        stack = list(frontier.items())
        while stack:
            (ins, dl), s = stack.pop()
            if ins < imax:
                j = i + ins - dl
                if 0 <= j < Lp:
                    k = (ins + 1, dl)
                    if frontier.get(k, smax + 1) > s:
                        frontier[k] = s
                        stack.append((k, s))
        if i == L:
            break
        nxt: dict[tuple[int, int], int] = {}
        xi = x[i]
        for (ins, dl), s in frontier.items():
            if dl < dmax:
                k = (ins, dl + 1)
                if nxt.get(k, smax + 1) > s:
                    nxt[k] = s
            j = i + ins - dl
            if 0 <= j < Lp:
                s2 = s + (xi != y[j])
                if s2 <= smax:
                    k = (ins, dl)
                    if nxt.get(k, smax + 1) > s2:
                        nxt[k] = s2
        if not nxt:
            return False
        frontier = nxt

    return any(
        L + ins - dl == Lp and s <= smax for (ins, dl), s in frontier.items()
    )
