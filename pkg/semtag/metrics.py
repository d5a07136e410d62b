#!/usr/bin/env python3
"""
Content Preservation Metrics

Character-bigram multiset comparison between an input text and a candidate
output. Cleaning may legitimately reflow lines and reorder two-column
layouts, so the metric compares bigram counts rather than aligning the
sequences.

Core Function: score how much of the input survives in the output.
"""

from collections import Counter
from dataclasses import dataclass, field
from itertools import pairwise
from typing import Mapping


@dataclass(frozen=True)
class BigramProfile:
    """Multiset of character bigrams of a normalized text"""
    counts: Mapping[str, int] = field(default_factory=Counter)
    total: int = 0


@dataclass(frozen=True)
class PreservationScore:
    """CPR plus the omitted and added bigram mass behind it"""
    cpr: float
    omissions: int
    additions: int

    @property
    def difference(self) -> int:
        return self.omissions + self.additions


def normalize(text: str) -> str:
    """
    Collapse every whitespace run to one space and trim both ends.

    >>> normalize("Taking  note\\nof")
    'Taking note of'
    >>> normalize("")
    ''
    """
    return " ".join(text.split())


def bigram_profile(text: str) -> BigramProfile:
    """
    Count consecutive character pairs of an already normalized text.

    >>> sorted(bigram_profile("abab").counts.items())
    [('ab', 2), ('ba', 1)]
    >>> bigram_profile("x").total
    0
    """
    counts = Counter(a + b for a, b in pairwise(text))
    return BigramProfile(counts=counts, total=max(len(text) - 1, 0))


def cpr(input_profile: BigramProfile, output_profile: BigramProfile) -> PreservationScore:
    """
    Content Preservation Ratio of an output against its input.

    With S the input bigram total and D the summed absolute count difference,
    the ratio is (S - D) / S clamped to [0, 1]. An empty input scores 1 only
    when the output is empty too.

    Args:
        input_profile: Profile of the normalized input text
        output_profile: Profile of the normalized output text

    Returns:
        PreservationScore with the ratio and its omission/addition mass

    >>> score = cpr(bigram_profile("abcd"), bigram_profile("abce"))
    >>> score.omissions, score.additions, round(score.cpr, 4)
    (1, 1, 0.3333)
    """
    c_in = Counter(input_profile.counts)
    c_out = Counter(output_profile.counts)
    omissions = sum((c_in - c_out).values())
    additions = sum((c_out - c_in).values())

    s = input_profile.total
    if s == 0:
        ratio = 1.0 if output_profile.total == 0 else 0.0
    else:
        ratio = min(max((s - (omissions + additions)) / s, 0.0), 1.0)

    return PreservationScore(cpr=ratio, omissions=omissions, additions=additions)


def inverted_cpr(input_profile: BigramProfile, output_profile: BigramProfile) -> float:
    """
    S / (S - D), the upside-down orientation of the preservation ratio.

    Kept only to show why the ratio is computed as (S - D) / S: this form
    exceeds 1 as soon as any bigram differs.

    >>> inverted_cpr(bigram_profile("abcd"), bigram_profile("abce"))
    3.0
    >>> inverted_cpr(bigram_profile("abcd"), bigram_profile("abcd"))
    1.0
    """
    score = cpr(input_profile, output_profile)
    s = input_profile.total
    remaining = s - score.difference
    if s == 0 and score.difference == 0:
        return 1.0
    if remaining == 0:
        return float("inf")
    return s / remaining


def preservation(input_text: str, output_text: str) -> PreservationScore:
    """Normalize, profile and compare two raw texts"""
    return cpr(bigram_profile(normalize(input_text)), bigram_profile(normalize(output_text)))
