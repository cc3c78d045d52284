"""Receiver-side mirror of generation: decode, repair, and realign.

The receiver re-derives every step plan from the shared key and its own
reconstructed sequence, so in the absence of tampering it consumes exactly
the sender's pseudo-random indices and reads back every embedded fragment.

Tampering is handled in three layers:
  * robust steps majority-decode the repetition code and re-embed the decoded
    fragment, which restores substituted tokens exactly;
  * non-robust positions compare against the fully determined expected token
    and are always restorable;
  * insertions/deletions shift received indices, which is repaired by scoring
    shift hypotheses (breakpoint within the step, probe offsets out to the mu
    window) and accepting a realignment only on strictly stronger in-step
    consensus. When the received length is unchanged and a step still shows a
    strict majority, no realignment is ever attempted, so recovery under the
    per-batch substitution bound is exact rather than probabilistic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from .engine import DistributionProvider, GenerationConfig, MASK, StepPlan, plan_step
from .prng import SteganoKey, token_uniform
from .sampling import (
    CategoricalDistribution,
    ExtractFailure,
    Framing,
    embed_token,
    extract_bits,
    sample_token,
)

__all__ = [
    "AllFailed",
    "ExtractionReport",
    "ExtractionState",
    "NotFound",
    "PositionOutcome",
    "Realigned",
    "StepDiagnostic",
    "correct_nonrobust",
    "decode_repetition",
    "extract_message",
    "mu_window",
    "neighborhood_search",
]


class AllFailed(Exception):
    """Every position of a robust step failed extraction."""


class PositionOutcome(Enum):
    Clean = "clean"
    CorrectedSubstitution = "corrected-substitution"
    Realigned = "realigned"
    Lost = "lost"


@dataclass(frozen=True)
class Realigned:
    delta: int


class NotFound:
    """Sentinel result: no qualifying token inside the search window."""

    def __repr__(self) -> str:  # pragma: no cover
        return "NotFound"


NOT_FOUND = NotFound()


@dataclass
class ExtractionState:
    """Receiver bookkeeping shared by all steps of one extraction session."""

    received: list[int]
    offsets: list[int]
    mu: int
    reconstructed: list[int]
    finalized: list[bool]
    diagnostics: dict[int, tuple[PositionOutcome, int]] = field(default_factory=dict)
    recovered_bits: str = ""


@dataclass
class StepDiagnostic:
    step_index: int
    capacity: int
    carried_message: bool
    votes: list[tuple[int, Optional[str]]]
    tampered_positions: list[int]
    realigned: dict[int, int]
    lost: bool


@dataclass
class ExtractionReport:
    message: str
    per_step: list[StepDiagnostic]
    loss_onset: Optional[int]
    declared_payload_bits: Optional[int]
    state: ExtractionState = field(repr=False)


def mu_window(L: int, L_prime: int) -> int:
    """Search radius: at least 2, grows with the observed length change."""
    return max(2, abs(L - L_prime))


def correct_nonrobust(
    dist: CategoricalDistribution, r: float, received_token: Optional[int]
) -> tuple[int, bool]:
    """Expected token at a message-free position, and whether the read deviates.

    The expected token is fully determined by the shared pseudo-random value,
    so restoration is always possible; any deviation is tampering.
    """
    expected = sample_token(dist, r)
    return expected, received_token != expected


def decode_repetition(
    results: Sequence[tuple[int, Optional[str]]], ell: int
) -> tuple[str, set[int]]:
    """Plurality vote over per-position extraction results.

    Ties resolve to the smallest decimal value. Positions that failed or
    disagree with the winner are reported as tampered. Raises AllFailed when
    no position extracted anything.
    """
    if not results:
        raise ValueError("results must be nonempty")
    if ell < 1:
        raise ValueError("ell must be at least 1")
    counts: dict[str, int] = {}
    for _, m in results:
        if m is not None:
            counts[m] = counts.get(m, 0) + 1
    if not counts:
        raise AllFailed(f"no successful extraction among {len(results)} positions")
    winner = min(counts, key=lambda m: (-counts[m], int(m, 2)))
    tampered = {pos for pos, m in results if m != winner}
    return winner, tampered


def _probe_deltas(mu: int):
    yield 0
    for d in range(1, mu + 1):
        yield d
        yield -d


def _read(received: Sequence[int], idx: int) -> Optional[int]:
    return received[idx] if 0 <= idx < len(received) else None


def _try_extract(
    dist: CategoricalDistribution, r: float, token: Optional[int], ell: int
) -> Optional[str]:
    if token is None:
        return None
    try:
        return extract_bits(dist, r, token, ell)
    except ExtractFailure:
        return None


def neighborhood_search(
    state: ExtractionState,
    position: int,
    dist: CategoricalDistribution,
    r: float,
    ell: int,
):
    """Scan indices around position + current offset for a decodable token.

    Probes deltas in the order 0, +1, -1, ..., +mu, -mu and returns the first
    one whose token extracts (ell >= 1) or matches the expected token
    (ell = 0). The caller is responsible for propagating an accepted delta to
    all later not-yet-finalized offsets.
    """
    base = position + state.offsets[position]
    expected = sample_token(dist, r) if ell == 0 else None
    for delta in _probe_deltas(state.mu):
        token = _read(state.received, base + delta)
        if token is None:
            continue
        if ell >= 1:
            if _try_extract(dist, r, token, ell) is not None:
                return Realigned(delta)
        elif token == expected:
            return Realigned(delta)
    return NOT_FOUND


def _consensus(votes: list[Optional[str]]) -> int:
    counts: dict[str, int] = {}
    best = 0
    for m in votes:
        if m is not None:
            c = counts.get(m, 0) + 1
            counts[m] = c
            if c > best:
                best = c
    return best


def _apply_realignment(state: ExtractionState, start_position: int, new_offset: int) -> None:
    """Set the offset of every not-yet-finalized position at or after start."""
    for i in range(start_position, len(state.offsets)):
        if not state.finalized[i]:
            state.offsets[i] = new_offset


class _ShiftHypothesis:
    """Breakpoint-plus-delta explanation of a step's failed reads."""

    __slots__ = ("b", "delta", "votes", "consensus")

    def __init__(self, b: int, delta: int, votes: list[Optional[str]], consensus: int):
        self.b = b
        self.delta = delta
        self.votes = votes
        self.consensus = consensus


def _best_shift_hypothesis(
    state: ExtractionState,
    positions: list[int],
    values_at,
    direct: list[Optional[str]],
) -> Optional[_ShiftHypothesis]:
    """Score single-breakpoint shift hypotheses against the direct reads.

    `values_at(i, idx)` evaluates position i's read at received index idx
    (extraction result or match token, None on failure). A hypothesis wins
    only with strictly higher consensus than the direct reads and at least
    two agreeing positions; ties always keep the current offsets.
    """
    base_consensus = _consensus(direct)
    best: Optional[_ShiftHypothesis] = None
    n = len(positions)
    memo: dict[tuple[int, int], Optional[str]] = {}

    # Probe deltas in the minimal-|delta| order; within one delta prefer the
    # latest breakpoint (realign as few positions as possible). Replacement
    # only on strictly higher consensus keeps that preference order.
    for delta in _probe_deltas(state.mu):
        if delta == 0:
            continue
        for b in range(n - 1, -1, -1):
            new_offset = state.offsets[positions[b]] + delta
            votes = list(direct[:b])
            for i in range(b, n):
                key = (i, positions[i] + new_offset)
                if key not in memo:
                    memo[key] = values_at(i, positions[i] + new_offset)
                votes.append(memo[key])
            cons = _consensus(votes)
            if cons <= max(base_consensus, 1):
                continue
            if best is None or cons > best.consensus:
                best = _ShiftHypothesis(b, delta, votes, cons)
    return best


def _parse_declared(stream: str) -> Optional[int]:
    if len(stream) < 32:
        return None
    return int(stream[:32], 2)


def extract_message(
    model: DistributionProvider,
    key: SteganoKey,
    config: GenerationConfig,
    received: Sequence[int],
    framing: Framing = Framing.LengthPrefixed32,
) -> ExtractionReport:
    """Mirror the generation process over a possibly tampered token sequence.

    Always returns a report; total desynchronization shows up as a short or
    empty message, never as an exception.
    """
    L = config.length
    received = list(received)
    state = ExtractionState(
        received=received,
        offsets=[0] * L,
        mu=mu_window(L, len(received)),
        reconstructed=[MASK] * L,
        finalized=[False] * L,
    )
    length_changed = len(received) != L
    per_step: list[StepDiagnostic] = []
    loss_onset: Optional[int] = None
    declared: Optional[int] = None

    for k in range(config.schedule.total_steps):
        plan = plan_step(state.reconstructed, k, key, model, config)
        positions = plan.unmask_positions
        if not positions:
            per_step.append(StepDiagnostic(k, plan.capacity, False, [], [], {}, False))
            continue

        rs = [token_uniform(key, k, pos) for pos in positions]
        if framing is Framing.Raw:
            pending = True
        else:
            pending = declared is None or len(state.recovered_bits) < 32 + declared

        if plan.robust and pending:
            lost = _process_carrier_step(state, plan, rs, length_changed, per_step)
            if lost and loss_onset is None:
                loss_onset = k
            if framing is Framing.LengthPrefixed32 and declared is None:
                declared = _parse_declared(state.recovered_bits)
        else:
            _process_checked_step(state, plan, rs, length_changed, per_step)

        for pos in positions:
            state.finalized[pos] = True

    if framing is Framing.LengthPrefixed32:
        payload = state.recovered_bits[32 : 32 + declared] if declared is not None else ""
    else:
        payload = state.recovered_bits
    return ExtractionReport(
        message=payload,
        per_step=per_step,
        loss_onset=loss_onset,
        declared_payload_bits=declared,
        state=state,
    )


def _process_carrier_step(
    state: ExtractionState,
    plan: StepPlan,
    rs: list[float],
    length_changed: bool,
    per_step: list[StepDiagnostic],
) -> bool:
    """Robust step holding message bits: extract, realign if needed, decode, restore.

    Returns True when the step's fragment was lost (zero-filled).
    """
    positions = plan.unmask_positions
    dists = plan.distributions
    ell = plan.capacity
    n = len(positions)

    def value_at(i: int, idx: int) -> Optional[str]:
        return _try_extract(dists[i], rs[i], _read(state.received, idx), ell)

    direct = [value_at(i, positions[i] + state.offsets[positions[i]]) for i in range(n)]
    realigned: dict[int, int] = {}
    votes = direct

    majority = n // 2 + 1
    settled = _consensus(direct) >= (majority if not length_changed else n)
    if not settled:
        hyp = _best_shift_hypothesis(state, positions, value_at, direct)
        if hyp is not None:
            new_offset = state.offsets[positions[hyp.b]] + hyp.delta
            for i in range(hyp.b, n):
                if hyp.votes[i] is not None:
                    realigned[positions[i]] = hyp.delta
            _apply_realignment(state, positions[hyp.b], new_offset)
            votes = hyp.votes

    results = list(zip(positions, votes))
    try:
        fragment, tampered = decode_repetition(results, ell)
        lost = False
    except AllFailed:
        fragment, tampered, lost = "0" * ell, set(positions), True

    state.recovered_bits += fragment
    for i, pos in enumerate(positions):
        if lost:
            state.reconstructed[pos] = sample_token(dists[i], rs[i])
            state.diagnostics[pos] = (PositionOutcome.Lost, 0)
        else:
            state.reconstructed[pos] = embed_token(dists[i], rs[i], fragment)
            if pos in realigned:
                state.diagnostics[pos] = (PositionOutcome.Realigned, realigned[pos])
            elif pos in tampered:
                state.diagnostics[pos] = (PositionOutcome.CorrectedSubstitution, 0)
            else:
                state.diagnostics[pos] = (PositionOutcome.Clean, 0)

    per_step.append(
        StepDiagnostic(
            step_index=plan.step_index,
            capacity=ell,
            carried_message=True,
            votes=results,
            tampered_positions=sorted(tampered),
            realigned=realigned,
            lost=lost,
        )
    )
    return lost


def _process_checked_step(
    state: ExtractionState,
    plan: StepPlan,
    rs: list[float],
    length_changed: bool,
    per_step: list[StepDiagnostic],
) -> None:
    """Message-free step: every token is determined by the shared stream.

    Mismatches are substitutions unless a shift hypothesis explains strictly
    more positions, in which case offsets are realigned first. Either way the
    expected token is written back, so reconstruction cannot drift here.
    """
    positions = plan.unmask_positions
    dists = plan.distributions
    n = len(positions)
    expected = [sample_token(dists[i], rs[i]) for i in range(n)]

    def value_at(i: int, idx: int) -> Optional[str]:
        token = _read(state.received, idx)
        return "ok" if token == expected[i] else None

    direct = [value_at(i, positions[i] + state.offsets[positions[i]]) for i in range(n)]
    realigned: dict[int, int] = {}

    if length_changed and _consensus(direct) < n:
        hyp = _best_shift_hypothesis(state, positions, value_at, direct)
        if hyp is not None:
            new_offset = state.offsets[positions[hyp.b]] + hyp.delta
            for i in range(hyp.b, n):
                if hyp.votes[i] is not None:
                    realigned[positions[i]] = hyp.delta
            _apply_realignment(state, positions[hyp.b], new_offset)
            direct = hyp.votes

    tampered = []
    for i, pos in enumerate(positions):
        token, was_tampered = correct_nonrobust(
            dists[i], rs[i], _read(state.received, pos + state.offsets[pos])
        )
        state.reconstructed[pos] = token
        if pos in realigned:
            state.diagnostics[pos] = (PositionOutcome.Realigned, realigned[pos])
        elif was_tampered:
            tampered.append(pos)
            state.diagnostics[pos] = (PositionOutcome.CorrectedSubstitution, 0)
        else:
            state.diagnostics[pos] = (PositionOutcome.Clean, 0)

    per_step.append(
        StepDiagnostic(
            step_index=plan.step_index,
            capacity=plan.capacity,
            carried_message=False,
            votes=[],
            tampered_positions=tampered,
            realigned=realigned,
            lost=False,
        )
    )
