"""Service error hierarchy.

Every error carries a stable machine-readable ``code`` that the HTTP layer
returns verbatim, so clients and the simulator can branch on it.
"""

from __future__ import annotations


class ServiceError(Exception):
    """Base class for all structured service errors."""

    code = "service_error"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code


# --- document tree ---

class MalformedOutline(ServiceError):
    code = "malformed_outline"

    def __init__(self, line_no: int, message: str = ""):
        super().__init__(message or f"bad outline line {line_no}")
        self.line_no = line_no


class KeyOrderViolation(ServiceError):
    code = "key_order_violation"


class NoGap(ServiceError):
    # Unreachable for keys this package generates (they never end in 'a');
    # kept for malformed externally-supplied bounds.
    code = "no_gap"


class UnknownParent(ServiceError):
    code = "unknown_parent"


class UnknownAnchor(ServiceError):
    code = "unknown_anchor"


class KindMismatch(ServiceError):
    code = "kind_mismatch"


# --- suggestions ---

class UnknownTarget(ServiceError):
    code = "unknown_target"


class UnknownEdit(ServiceError):
    code = "unknown_edit"


class AlreadyResolved(ServiceError):
    code = "already_resolved"


class StaleEdit(ServiceError):
    code = "stale_edit"


class NotAuthor(ServiceError):
    code = "not_author"


# --- comments ---

class UnknownThread(ServiceError):
    code = "unknown_thread"


class ThreadResolved(ServiceError):
    code = "thread_resolved"


class EmptyText(ServiceError):
    code = "empty_text"


# --- tasks ---

class UnknownTask(ServiceError):
    code = "unknown_task"


class NotAssignee(ServiceError):
    code = "not_assignee"


class AlreadyDone(ServiceError):
    code = "already_done"


# --- orchestrator ---

class Unauthorized(ServiceError):
    code = "unauthorized"


class UnknownDocument(ServiceError):
    code = "unknown_document"


class UnknownRoute(ServiceError):
    code = "unknown_route"


class MalformedLog(ServiceError):
    code = "malformed_log"

    def __init__(self, seq: int | None = None, message: str = ""):
        super().__init__(message or f"malformed log at seq {seq}")
        self.seq = seq


class StorageFailure(ServiceError):
    code = "storage_failure"
