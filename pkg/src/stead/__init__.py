"""Robust secret-message embedding in the reverse denoising of masked diffusion LMs.

The sender drives token sampling with keyed pseudo-random numbers offset by
message bits; the receiver mirrors the denoising loop with the shared key,
majority-decodes repetition-coded fragments, repairs substituted tokens via
the shared pseudo-random stream, and realigns after insertions/deletions with
a bounded neighborhood search.
"""

from .prng import PrnRole, SteganoKey, derive_uniform
from .sampling import (
    AllMassTruncated,
    CategoricalDistribution,
    ExtractFailure,
    Framing,
    MessageBitstream,
    SamplingConfig,
    UnknownToken,
    canonicalize,
    embed_token,
    extract_bits,
    offset_prn,
    sample_token,
    step_capacity,
)
from .engine import (
    MASK,
    DenoiseSchedule,
    GenerationConfig,
    ModelFault,
    StegoResult,
    StepPlan,
    embed_message,
    generate_cover,
    plan_step,
)
from .extraction import (
    AllFailed,
    ExtractionReport,
    ExtractionState,
    NotFound,
    Realigned,
    correct_nonrobust,
    decode_repetition,
    extract_message,
    mu_window,
    neighborhood_search,
)
from .synthetic import SyntheticModel, SyntheticModelSpec
from .attacks import TamperProfile, delete, insert, mixed_attack, substitute, verify_bound
from .metrics import (
    CampaignResult,
    NoRobustSteps,
    RecoveryReport,
    embedding_capacity,
    empirical_kld,
    recovery_rates,
    robustness_margin,
    run_campaign,
    sequence_entropy,
)
from .bridge import BridgeModel, BridgeSession, Nondeterminism, ProtocolViolation, Transport

__all__ = [
    "AllFailed",
    "AllMassTruncated",
    "BridgeModel",
    "BridgeSession",
    "CampaignResult",
    "CategoricalDistribution",
    "DenoiseSchedule",
    "ExtractFailure",
    "ExtractionReport",
    "ExtractionState",
    "Framing",
    "GenerationConfig",
    "MASK",
    "MessageBitstream",
    "ModelFault",
    "Nondeterminism",
    "NoRobustSteps",
    "NotFound",
    "PrnRole",
    "ProtocolViolation",
    "Realigned",
    "RecoveryReport",
    "SamplingConfig",
    "SteganoKey",
    "StegoResult",
    "StepPlan",
    "SyntheticModel",
    "SyntheticModelSpec",
    "TamperProfile",
    "Transport",
    "UnknownToken",
    "canonicalize",
    "correct_nonrobust",
    "decode_repetition",
    "delete",
    "derive_uniform",
    "embed_message",
    "embed_token",
    "embedding_capacity",
    "empirical_kld",
    "extract_bits",
    "extract_message",
    "generate_cover",
    "insert",
    "mixed_attack",
    "mu_window",
    "neighborhood_search",
    "offset_prn",
    "plan_step",
    "recovery_rates",
    "robustness_margin",
    "run_campaign",
    "sample_token",
    "sequence_entropy",
    "step_capacity",
    "substitute",
    "verify_bound",
]
