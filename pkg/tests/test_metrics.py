from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semtag.metrics import (
    bigram_profile, cpr, inverted_cpr, normalize, preservation,
)

texts = st.text(alphabet=st.sampled_from("ab c\nXy."), max_size=200)


def oracle(a: str, b: str):
    """Straight transcription of (S, D, (S - D) / S) over bigram counts"""
    a, b = " ".join(a.split()), " ".join(b.split())
    ca = Counter(a[i:i + 2] for i in range(len(a) - 1))
    cb = Counter(b[i:i + 2] for i in range(len(b) - 1))
    s = sum(ca.values())
    d = sum(abs(ca[k] - cb[k]) for k in set(ca) | set(cb))
    if s == 0:
        return s, d, (1.0 if sum(cb.values()) == 0 else 0.0)
    return s, d, min(max((s - d) / s, 0.0), 1.0)


class TestNormalize:
    def test_collapses_whitespace_runs(self):
        assert normalize("  Taking\n\nnote\t of  ") == "Taking note of"

    def test_empty(self):
        assert normalize("   \n") == ""


class TestCpr:
    def test_identity(self):
        assert preservation("The Security Council", "The Security Council").cpr == 1.0

    def test_reflow_is_free(self):
        assert preservation("Taking note\nof the report", "Taking note of   the report").cpr == 1.0

    def test_one_substitution(self):
        score = preservation("abcd", "abce")
        assert score.omissions == 1
        assert score.additions == 1
        assert score.cpr == pytest.approx(1 / 3)

    def test_total_loss_clamps_to_zero(self):
        assert preservation("abcdef", "").cpr == 0.0
        assert preservation("ab", "xyzxyzxyz").cpr == 0.0

    def test_empty_input(self):
        assert preservation("", "").cpr == 1.0
        assert preservation("", "some output").cpr == 0.0

    def test_additions_count_against_preservation(self):
        assert preservation("abcd", "abcdxx").cpr < 1.0

    def test_inverted_orientation_exceeds_one(self):
        assert inverted_cpr(bigram_profile("abcd"), bigram_profile("abce")) == pytest.approx(3.0)
        assert inverted_cpr(bigram_profile("abcd"), bigram_profile("abcd")) == 1.0
        assert inverted_cpr(bigram_profile("abc"), bigram_profile("abx")) == float("inf")

    @settings(max_examples=1000)
    @given(texts, texts)
    def test_matches_oracle(self, a, b):
        s, d, expected = oracle(a, b)
        score = preservation(a, b)
        assert bigram_profile(normalize(a)).total == s
        assert score.difference == d
        assert score.cpr == expected

    @settings(max_examples=300)
    @given(texts, texts)
    def test_bounded(self, a, b):
        assert 0.0 <= preservation(a, b).cpr <= 1.0

    @settings(max_examples=300)
    @given(texts)
    def test_self_similarity(self, a):
        profile = bigram_profile(normalize(a))
        assert cpr(profile, profile).cpr == 1.0

    @settings(max_examples=500)
    @given(texts, texts)
    def test_mass_bounded_by_larger_total(self, a, b):
        score = preservation(a, b)
        bound = max(bigram_profile(normalize(a)).total, bigram_profile(normalize(b)).total)
        assert score.omissions <= bound
        assert score.additions <= bound

    @settings(max_examples=500)
    @given(texts, texts.filter(bool), st.data())
    def test_deleting_one_output_character(self, a, b, data):
        index = data.draw(st.integers(min_value=0, max_value=len(b) - 1))
        shorter = b[:index] + b[index + 1:]
        before, after = preservation(a, b), preservation(a, shorter)
        assert after.additions <= before.additions + 2
        s = bigram_profile(normalize(a)).total
        if s:
            assert after.cpr == min(max((s - after.difference) / s, 0.0), 1.0)
