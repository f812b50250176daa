"""Shared error hierarchy.

Every data-level failure raised by this package derives from WorkbenchError and
carries a stable, module-prefixed ``code`` so the CLI and the HTTP service can
map errors without string matching.
"""


class WorkbenchError(Exception):
    """Base class for data errors; subclasses set ``code``."""

    code = "error"


class EmptyInput(WorkbenchError):
    """An operation that requires at least one element got none."""

    code = "EmptyInput"
