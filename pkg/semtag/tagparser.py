#!/usr/bin/env python3
"""
Tag Parser - Closed-Vocabulary Tag Tokenizer and Well-Formedness Audit

Splits tagged text into open, close and text tokens over a fixed vocabulary
of tag names, audits tag pairing with a stack, and extracts annotation spans
in the coordinates of the tag-stripped text.

Anything that is not an exact `<name>` or `</name>` for a vocabulary name is
literal text: OCR noise and legal citations carry stray angle brackets.
"""

import re
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Tuple

from semtag.errors import ConfigError

DEFAULT_TAGS = ("location", "entity", "event", "organization", "date")

_NAME_PATTERN = re.compile(r"[a-z]+")


@dataclass(frozen=True)
class TagVocabulary:
    """Ordered set of recognised tag names"""
    names: Tuple[str, ...] = DEFAULT_TAGS

    def __post_init__(self):
        if not self.names:
            raise ConfigError("tag vocabulary is empty")
        if len(set(self.names)) != len(self.names):
            raise ConfigError(f"tag vocabulary has duplicates: {self.names}")
        for name in self.names:
            if not _NAME_PATTERN.fullmatch(name):
                raise ConfigError(f"tag name must be lowercase ASCII letters: {name!r}")

    @classmethod
    def default(cls) -> "TagVocabulary":
        return cls(DEFAULT_TAGS)

    @classmethod
    def from_names(cls, names: Iterable[str]) -> "TagVocabulary":
        return cls(tuple(names))

    def __contains__(self, name: str) -> bool:
        return name in self.names


class TokenKind(Enum):
    """Kinds of tagged-text tokens"""
    OPEN = "open"
    CLOSE = "close"
    TEXT = "text"


@dataclass(frozen=True)
class TagToken:
    """One token with its exact source span"""
    kind: TokenKind
    source: str
    offset: int
    name: Optional[str] = None


@dataclass(frozen=True)
class Annotation:
    """A matched tag pair located in the tag-stripped text"""
    tag: str
    text: str
    start: int
    end: int


class ProblemKind(Enum):
    UNMATCHED_CLOSE = "unmatched_close"
    UNCLOSED_OPEN = "unclosed_open"


@dataclass(frozen=True)
class TagProblem:
    """A malformed tag event, located in the tagged source"""
    kind: ProblemKind
    tag: str
    offset: int


@dataclass
class TagAudit:
    """Result of stack-matching a tagged text"""
    n_pairs: int = 0
    n_malformed: int = 0
    per_tag_pairs: Dict[str, int] = field(default_factory=dict)
    annotations: List[Annotation] = field(default_factory=list)
    problems: List[TagProblem] = field(default_factory=list)


@lru_cache(maxsize=32)
def _tag_pattern(names: Tuple[str, ...]) -> "re.Pattern[str]":
    alternatives = "|".join(re.escape(name) for name in names)
    return re.compile(rf"<(/?)({alternatives})>")


def tokenize(text: str, vocab: Optional[TagVocabulary] = None) -> List[TagToken]:
    """
    Lossless tokenization: the token sources concatenate back to `text`.

    Args:
        text: Tagged text
        vocab: Recognised tag names (defaults to the five standard tags)

    Returns:
        List of TagToken in source order

    >>> [t.kind.value for t in tokenize("<location>Iran</location>")]
    ['open', 'text', 'close']
    >>> [t.source for t in tokenize("a < b and <misc>x</misc>")]
    ['a < b and <misc>x</misc>']
    """
    vocab = vocab or TagVocabulary.default()
    tokens: List[TagToken] = []
    position = 0

    for match in _tag_pattern(vocab.names).finditer(text):
        if match.start() > position:
            tokens.append(TagToken(TokenKind.TEXT, text[position:match.start()], position))
        kind = TokenKind.CLOSE if match.group(1) else TokenKind.OPEN
        tokens.append(TagToken(kind, match.group(0), match.start(), name=match.group(2)))
        position = match.end()

    if position < len(text):
        tokens.append(TagToken(TokenKind.TEXT, text[position:], position))

    return tokens


def audit(tokens: List[TagToken]) -> TagAudit:
    """
    Single left-to-right stack pass over tokens.

    An open tag is pushed. A close tag matching the top of the stack pops it
    and records a pair. A close tag that does not match the top (or meets an
    empty stack) is malformed and discarded without touching the stack. Every
    name left on the stack at the end is malformed.

    >>> result = audit(tokenize("<entity><date></entity></date>"))
    >>> result.n_pairs, result.n_malformed
    (1, 2)
    """
    result = TagAudit()
    stack: List[Tuple[str, int, int]] = []  # (name, stripped start, source offset)
    plain: List[str] = []
    plain_pos = 0
    spans: List[Tuple[str, int, int]] = []

    for token in tokens:
        if token.kind is TokenKind.TEXT:
            plain.append(token.source)
            plain_pos += len(token.source)
        elif token.kind is TokenKind.OPEN:
            stack.append((token.name, plain_pos, token.offset))
        elif stack and stack[-1][0] == token.name:
            name, start, _ = stack.pop()
            result.n_pairs += 1
            result.per_tag_pairs[name] = result.per_tag_pairs.get(name, 0) + 1
            spans.append((name, start, plain_pos))
        else:
            result.n_malformed += 1
            result.problems.append(TagProblem(ProblemKind.UNMATCHED_CLOSE, token.name, token.offset))

    for name, _, offset in stack:
        result.n_malformed += 1
        result.problems.append(TagProblem(ProblemKind.UNCLOSED_OPEN, name, offset))

    stripped = "".join(plain)
    spans.sort(key=lambda span: (span[1], -span[2]))
    result.annotations = [Annotation(name, stripped[start:end], start, end) for name, start, end in spans]
    return result


def twf(result: TagAudit) -> float:
    """
    Tag Well-Formedness: pairs / (pairs + malformed), 1.0 when both are zero.

    >>> twf(TagAudit(n_pairs=1, n_malformed=2))
    0.3333333333333333
    """
    events = result.n_pairs + result.n_malformed
    if events == 0:
        return 1.0
    return result.n_pairs / events


def n_tags(result: TagAudit) -> int:
    """Number of well-formed tag pairs"""
    return result.n_pairs


def plain_text(tokens: List[TagToken]) -> str:
    """Concatenated text tokens: one removal pass over the tags"""
    return "".join(token.source for token in tokens if token.kind is TokenKind.TEXT)


def strip_tags(text: str, vocab: Optional[TagVocabulary] = None) -> str:
    """
    Remove every vocabulary tag, matched or not.

    Removal repeats until no tag is left, since text on both sides of a
    removed tag can join into a new one.

    >>> strip_tags("<date>1946")
    '1946'
    >>> strip_tags("<<date>date>1946</</date>date>")
    '1946'
    """
    vocab = vocab or TagVocabulary.default()
    tokens = tokenize(text, vocab)
    while any(token.kind is not TokenKind.TEXT for token in tokens):
        tokens = tokenize(plain_text(tokens), vocab)
    return plain_text(tokens)


def tag_markers(tokens: List[TagToken]) -> List[Tuple[int, str]]:
    """Literal tags with their insertion offsets in `plain_text(tokens)`"""
    markers: List[Tuple[int, str]] = []
    plain_pos = 0
    for token in tokens:
        if token.kind is TokenKind.TEXT:
            plain_pos += len(token.source)
        else:
            markers.append((plain_pos, token.source))
    return markers


def insert_markers(plain: str, markers: List[Tuple[int, str]]) -> str:
    """
    Re-insert tags produced by `tag_markers` into the `plain_text` of the same tokens.

    >>> text = "<entity>UN</entity> met in <location>Paris"
    >>> tokens = tokenize(text)
    >>> insert_markers(plain_text(tokens), tag_markers(tokens)) == text
    True
    """
    pieces: List[str] = []
    position = 0
    for offset, literal in markers:
        pieces.append(plain[position:offset])
        pieces.append(literal)
        position = offset
    pieces.append(plain[position:])
    return "".join(pieces)
