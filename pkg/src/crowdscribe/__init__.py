"""Crowd-orchestrated collaborative writing service.

Crowd workers propose typed suggested edits against a structured document;
a single author reviews each one from a constrained card-style client; a
randomized skip-able task queue coordinates the workers; and everything the
server does flows through one append-only, deterministically replayable
event log.
"""

from .core import ServerCore, Session, replay, replay_file
from .document import DocumentTree, export, import_structured, parse_seed_outline
from .errors import ServiceError
from .suggestions import MetricsSummary, SuggestionBook, classify_metrics

__all__ = [
    "DocumentTree",
    "MetricsSummary",
    "ServerCore",
    "ServiceError",
    "Session",
    "SuggestionBook",
    "classify_metrics",
    "export",
    "import_structured",
    "parse_seed_outline",
    "replay",
    "replay_file",
]
