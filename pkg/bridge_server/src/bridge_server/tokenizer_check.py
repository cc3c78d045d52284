"""Tokenizer round-trip fidelity measurement.

A token sequence decoded to text and re-encoded may come back as different
tokens. For a receiver that only sees text, that re-segmentation acts exactly
like token-level substitutions, insertions, and deletions, so this module
quantifies it in those terms: per-text edit counts between the original
tokens and the re-encoded tokens.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

Encode = Callable[[str], Sequence[int]]
Decode = Callable[[Sequence[int]], str]


@dataclass
class RoundTripReport:
    total_texts: int = 0
    mismatched_texts: int = 0
    total_tokens: int = 0
    substitutions: int = 0
    insertions: int = 0
    deletions: int = 0
    worst_cases: list[str] = field(default_factory=list)

    @property
    def mismatch_rate(self) -> float:
        return self.mismatched_texts / self.total_texts if self.total_texts else 0.0

    @property
    def edit_rate(self) -> float:
        edits = self.substitutions + self.insertions + self.deletions
        return edits / self.total_tokens if self.total_tokens else 0.0

    def as_dict(self) -> dict:
        return {
            "total_texts": self.total_texts,
            "mismatched_texts": self.mismatched_texts,
            "mismatch_rate": self.mismatch_rate,
            "total_tokens": self.total_tokens,
            "substitutions": self.substitutions,
            "insertions": self.insertions,
            "deletions": self.deletions,
            "edit_rate": self.edit_rate,
        }


def edit_counts(a: Sequence[int], b: Sequence[int]) -> tuple[int, int, int]:
    """(substitutions, insertions, deletions) of a minimal edit script a -> b."""
    n, m = len(a), len(b)
    if n == 0:
        return 0, m, 0
    if m == 0:
        return 0, 0, n
    table = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        table[i][0] = i
    for j in range(m + 1):
        table[0][j] = j
    for i in range(1, n + 1):
        ai = a[i - 1]
        row, prev = table[i], table[i - 1]
        for j in range(1, m + 1):
            row[j] = min(
                prev[j - 1] + (ai != b[j - 1]),
                prev[j] + 1,
                row[j - 1] + 1,
            )
    subs = ins = dels = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and table[i][j] == table[i - 1][j - 1] + (a[i - 1] != b[j - 1]):
            subs += a[i - 1] != b[j - 1]
            i, j = i - 1, j - 1
        elif i > 0 and table[i][j] == table[i - 1][j] + 1:
            dels += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return subs, ins, dels


def round_trip_report(
    encode: Encode, decode: Decode, corpus: Iterable[str], keep_worst: int = 5
) -> RoundTripReport:
    """Encode -> decode -> re-encode every text and tally token-level damage."""
    report = RoundTripReport()
    scored: list[tuple[int, str]] = []
    for text in corpus:
        original = list(encode(text))
        recoded = list(encode(decode(original)))
        report.total_texts += 1
        report.total_tokens += len(original)
        if original == recoded:
            continue
        report.mismatched_texts += 1
        s, i, d = edit_counts(original, recoded)
        report.substitutions += s
        report.insertions += i
        report.deletions += d
        scored.append((s + i + d, text))
    scored.sort(key=lambda pair: -pair[0])
    report.worst_cases = [text for _, text in scored[:keep_worst]]
    return report


class WhitespaceTokenizer:
    """Toy tokenizer with a deliberately lossy decode, for exercising the report."""

    def __init__(self, lossy: bool = False):
        self.vocab: dict[str, int] = {}
        self.words: list[str] = []
        self.lossy = lossy

    def encode(self, text: str) -> list[int]:
        out = []
        for word in text.split():
            if word not in self.vocab:
                self.vocab[word] = len(self.words)
                self.words.append(word)
            out.append(self.vocab[word])
        return out

    def decode(self, tokens: Sequence[int]) -> str:
        words = [self.words[t] for t in tokens]
        if self.lossy:
            # glue consecutive single characters together, like a merge-happy
            # detokenizer would
            glued: list[str] = []
            for word in words:
                if glued and len(word) == 1 and len(glued[-1]) == 1:
                    glued[-1] += word
                else:
                    glued.append(word)
            words = glued
        return " ".join(words)
