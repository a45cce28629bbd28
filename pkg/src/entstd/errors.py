"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class EntstdError(Exception):
    """Base class for all toolkit errors."""


class DataError(EntstdError):
    """Malformed, inconsistent, or missing input data (corpora, artifacts, files)."""


class CorpusValidationError(DataError):
    """A corpus violates one or more structural invariants."""

    def __init__(self, findings):
        self.findings = list(findings)
        lines = "; ".join(str(f) for f in self.findings)
        super().__init__(f"corpus validation failed: {lines}")


class ProviderError(EntstdError):
    """The remote embedding provider returned an error or inconsistent payload."""
