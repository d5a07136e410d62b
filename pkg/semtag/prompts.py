"""
Prompt templates for the cleaning and tagging tasks.

The instruction texts are fixed; changing a single byte invalidates every
recorded replay fixture because fixtures are keyed on the prompt digest.
"""

import hashlib
from enum import Enum
from typing import Optional, Tuple

from semtag.errors import EmptyPromptError
from semtag.tagparser import TagVocabulary

SEPARATOR = "\n\n"

CLEAN_INSTRUCTION = (
    "Include answer only: this text is scanned old UN resolution that can be in two columns, "
    "can you convert it into one column and correct any OCR errors, and remove printing hyphens "
    "and printing line breaks - if there is English and French texts, separate them, and keep "
    "the English first and French second"
)

TAG_INSTRUCTION = (
    "Include answer only: use xml tags to annotate this text, highlighting text within the ONLY "
    "these tags, while completely preserving the input text without any addition or omission:"
)


class TaskKind(Enum):
    """The two pipeline tasks"""
    CLEAN = "clean"
    TAG = "tag"


def clean_template() -> str:
    return CLEAN_INSTRUCTION


def tag_template(vocab: Optional[TagVocabulary] = None) -> str:
    vocab = vocab or TagVocabulary.default()
    tag_list = " ".join(f"<{name}>" for name in vocab.names)
    return f"{TAG_INSTRUCTION}{SEPARATOR}{tag_list}"


def render(template: str, body: str) -> str:
    """Instruction, a blank line, then the document body"""
    if not body:
        raise EmptyPromptError("prompt body is empty")
    return f"{template}{SEPARATOR}{body}"


def split(prompt: str) -> Tuple[Optional[TaskKind], str]:
    """
    Recover (task kind, body) from a rendered prompt.

    Unknown prompts yield (None, prompt).
    """
    if prompt.startswith(CLEAN_INSTRUCTION + SEPARATOR):
        return TaskKind.CLEAN, prompt[len(CLEAN_INSTRUCTION) + len(SEPARATOR):]
    if prompt.startswith(TAG_INSTRUCTION + SEPARATOR):
        rest = prompt[len(TAG_INSTRUCTION) + len(SEPARATOR):]
        _, sep, body = rest.partition(SEPARATOR)
        if sep:
            return TaskKind.TAG, body
    return None, prompt


def digest(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()
