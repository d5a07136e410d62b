import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semtag.errors import ConfigError
from semtag.tagparser import (
    DEFAULT_TAGS, ProblemKind, TagVocabulary, TokenKind, audit, insert_markers, n_tags,
    plain_text, strip_tags, tag_markers, tokenize, twf,
)

fragments = st.lists(
    st.one_of(
        st.sampled_from([f"<{name}>" for name in DEFAULT_TAGS]),
        st.sampled_from([f"</{name}>" for name in DEFAULT_TAGS]),
        st.text(alphabet=st.sampled_from("ab <>/x"), max_size=6),
        st.sampled_from(["<misc>", "</b>", "<Location>", "< date>"]),
    ),
    max_size=20,
)


def simulate(text: str):
    """Independent stack walk over a character scan"""
    pairs = malformed = 0
    stack = []
    i = 0
    while i < len(text):
        hit = None
        for name in DEFAULT_TAGS:
            for literal, closing in ((f"<{name}>", False), (f"</{name}>", True)):
                if text.startswith(literal, i):
                    hit = (name, closing, literal)
        if hit is None:
            i += 1
            continue
        name, closing, literal = hit
        if not closing:
            stack.append(name)
        elif stack and stack[-1] == name:
            stack.pop()
            pairs += 1
        else:
            malformed += 1
        i += len(literal)
    return pairs, malformed + len(stack)


class TestTokenize:
    def test_kinds(self):
        tokens = tokenize("The <organization>Security Council</organization> met")
        assert [t.kind for t in tokens] == [
            TokenKind.TEXT, TokenKind.OPEN, TokenKind.TEXT, TokenKind.CLOSE, TokenKind.TEXT,
        ]
        assert tokens[1].name == "organization"

    def test_unknown_tags_are_text(self):
        tokens = tokenize("<misc>x</misc> a < b")
        assert len(tokens) == 1
        assert tokens[0].kind is TokenKind.TEXT

    def test_case_sensitive(self):
        assert all(t.kind is TokenKind.TEXT for t in tokenize("<Location>Iran</Location>"))

    @settings(max_examples=2000)
    @given(fragments)
    def test_lossless(self, parts):
        text = "".join(parts)
        assert "".join(t.source for t in tokenize(text)) == text


class TestAudit:
    def test_well_formed(self):
        result = audit(tokenize("<location>Iran</location> and <date>1946</date>"))
        assert (result.n_pairs, result.n_malformed) == (2, 0)
        assert twf(result) == 1.0
        assert result.per_tag_pairs == {"location": 1, "date": 1}

    def test_crossed_tags(self):
        result = audit(tokenize("<entity><date></entity></date>"))
        assert (result.n_pairs, result.n_malformed) == (1, 2)
        assert twf(result) == pytest.approx(1 / 3)
        kinds = sorted(problem.kind.value for problem in result.problems)
        assert kinds == ["unclosed_open", "unmatched_close"]

    def test_stray_close(self):
        result = audit(tokenize("text</event>"))
        assert result.n_malformed == 1
        assert result.problems[0].kind is ProblemKind.UNMATCHED_CLOSE
        assert result.problems[0].offset == 4

    def test_no_tags(self):
        result = audit(tokenize("plain text"))
        assert twf(result) == 1.0
        assert n_tags(result) == 0

    def test_nested_annotations(self):
        text = "<organization>UN <location>Paris</location></organization>"
        result = audit(tokenize(text))
        assert [(a.tag, a.text, a.start, a.end) for a in result.annotations] == [
            ("organization", "UN Paris", 0, 8),
            ("location", "Paris", 3, 8),
        ]

    @settings(max_examples=10000)
    @given(fragments)
    def test_matches_stack_simulation(self, parts):
        text = "".join(parts)
        result = audit(tokenize(text))
        assert (result.n_pairs, result.n_malformed) == simulate(text)
        assert 0.0 <= twf(result) <= 1.0


class TestStrip:
    def test_strips_unmatched_too(self):
        assert strip_tags("<date>1946 <entity>UN</entity>") == "1946 UN"

    def test_tags_formed_by_removal_are_stripped(self):
        assert plain_text(tokenize("<<date>date>1946</</date>date>")) == "<date>1946</date>"
        assert strip_tags("<<date>date>1946</</date>date>") == "1946"

    def test_identity_without_tags(self):
        assert strip_tags("a < b and <misc>x</misc>") == "a < b and <misc>x</misc>"

    @settings(max_examples=2000)
    @given(fragments)
    def test_idempotent(self, parts):
        once = strip_tags("".join(parts))
        assert strip_tags(once) == once
        assert all(t.kind is TokenKind.TEXT for t in tokenize(once))

    @settings(max_examples=2000)
    @given(fragments)
    def test_markers_restore_source(self, parts):
        text = "".join(parts)
        tokens = tokenize(text)
        assert insert_markers(plain_text(tokens), tag_markers(tokens)) == text


class TestVocabulary:
    def test_default(self):
        assert TagVocabulary.default().names == DEFAULT_TAGS

    def test_custom_vocabulary(self):
        vocab = TagVocabulary.from_names(["person"])
        assert "person" in vocab
        result = audit(tokenize("<person>Ana</person><location>x</location>", vocab))
        assert result.n_pairs == 1

    @pytest.mark.parametrize("names", [[], ["date", "date"], ["Date"], ["a-b"]])
    def test_rejects_invalid(self, names):
        with pytest.raises(ConfigError):
            TagVocabulary.from_names(names)
