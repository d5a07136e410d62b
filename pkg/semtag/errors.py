"""
Exception hierarchy for semtag.

Every error raised on purpose by the package derives from SemtagError so the
CLI can map failures onto its exit-code contract in one place.
"""

from typing import List, Optional


class SemtagError(Exception):
    """Base class for all semtag errors"""


class ConfigError(SemtagError):
    """Invalid or unreadable configuration"""


class CorpusError(SemtagError):
    """Input corpus cannot be read"""


class StorageError(SemtagError):
    """Output tree or ledger could not be written"""


class DuplicateLedgerKeyError(StorageError):
    """A (doc_id, task, model, run_index) key is already in the ledger"""

    def __init__(self, key: tuple):
        super().__init__(f"duplicate ledger key: {key}")
        self.key = key


class EmptyPromptError(SemtagError):
    """Prompt body is empty"""


# ===== PROVIDER ERRORS =====

class ProviderError(SemtagError):
    """A completion request failed"""

    transient = False


class TransportError(ProviderError):
    """Network failure, timeout, rate limit or server error"""

    transient = True


class AuthenticationError(ProviderError):
    """Missing or rejected credentials"""


class RefusalError(ProviderError):
    """Backend rejected the request or refused to answer"""


class FixtureError(ProviderError):
    """Replay fixture is missing or was recorded for a different prompt"""


# ===== SELECTION ERRORS =====

class NoCandidatesError(SemtagError):
    """Selection was asked to choose among zero usable records"""


class AllRunsFailedError(SemtagError):
    """Every completion for a (document, task) failed"""

    def __init__(self, doc_id: str, task: str, records: Optional[List] = None):
        super().__init__(f"all runs failed for {doc_id} ({task})")
        self.doc_id = doc_id
        self.task = task
        self.records = records or []
