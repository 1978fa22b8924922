"""Exception taxonomy shared by every layer (model, workspace, CLI, service).

Each error carries a stable ``code`` used verbatim in CLI ``--json`` envelopes
and HTTP error envelopes. User errors map to exit code 1 / HTTP 4xx; provider
and storage errors map to exit code 2 / HTTP 502.
"""

from __future__ import annotations

from typing import Any


class OOPromptError(Exception):
    """Base class for all domain errors."""

    code = "error"

    def __init__(self, message: str = "", **details: Any) -> None:
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__
        self.details = details


# --- user errors (exit 1 / HTTP 400 unless noted) ---

class DuplicateName(OOPromptError):
    code = "duplicate_name"


class EmptyName(OOPromptError):
    code = "empty_name"


class UnknownProperty(OOPromptError):
    code = "unknown_property"


class UnknownObject(OOPromptError):
    code = "unknown_object"


class UnknownTemplate(OOPromptError):
    code = "unknown_template"


class UnknownDefault(OOPromptError):
    code = "unknown_default"


class UnknownVersion(OOPromptError):
    code = "unknown_version"


class UnknownProposal(OOPromptError):
    code = "unknown_proposal"


class UnknownRun(OOPromptError):
    code = "unknown_run"


class NeverExisted(OOPromptError):
    code = "never_existed"


class InvariantViolation(OOPromptError):
    code = "invariant_violation"


class AlreadyNested(OOPromptError):
    code = "already_nested"


class NotNested(OOPromptError):
    code = "not_nested"


class ChildTooDeep(OOPromptError):
    code = "child_too_deep"


class InvalidPermutation(OOPromptError):
    code = "invalid_permutation"


class NestedNotTemplatable(OOPromptError):
    code = "nested_not_templatable"


class DuplicateTemplateId(OOPromptError):
    code = "duplicate_template_id"


class EmptyLibrary(OOPromptError):
    code = "empty_library"


class EmptyInput(OOPromptError):
    code = "empty_input"


class NotTextValued(OOPromptError):
    code = "not_text_valued"


class NoSequentialGroup(OOPromptError):
    code = "no_sequential_group"


class CycleDetected(OOPromptError):
    code = "cycle_detected"


class PreconditionViolation(OOPromptError):
    code = "precondition_violation"


class StaleVersion(OOPromptError):
    """Optimistic-concurrency rejection (HTTP 409)."""

    code = "version_conflict"


# --- storage errors (exit 2) ---

class WorkspaceError(OOPromptError):
    code = "workspace_error"


class CorruptFile(WorkspaceError):
    code = "corrupt_file"

    def __init__(self, path: str, detail: str) -> None:
        super().__init__(f"corrupt file {path}: {detail}", path=path, detail=detail)


class SchemaVersionMismatch(WorkspaceError):
    code = "schema_version_mismatch"


# --- provider errors (exit 2 / HTTP 502) ---

class ProviderError(OOPromptError):
    code = "provider_error"


class ProviderUnavailable(ProviderError):
    code = "provider_unavailable"


class MalformedResponse(ProviderError):
    """Provider answered, but the payload does not match the role schema.

    ``raw_text`` is preserved so callers can surface it instead of guessing.
    """

    code = "malformed_response"

    def __init__(self, message: str, raw_text: str = "") -> None:
        super().__init__(message, raw_text=raw_text)
        self.raw_text = raw_text


class Timeout(ProviderError):
    code = "timeout"
