"""
Errors - exception hierarchy shared by the library and the CLI

Every error carries the exit code the command line reports for it.
"""

from __future__ import annotations

from typing import Any, Dict, Optional


class SymdivError(Exception):
    """Base class for every error raised by symdiv."""

    exit_code = 1


class ArgumentError(SymdivError, ValueError):
    """Invalid argument: bad index, empty input, mismatched dimension..."""

    exit_code = 2


class DomainError(SymdivError, ValueError):
    """A point lies outside the set the group acts on."""

    exit_code = 2


class UnsupportedOperationError(SymdivError):
    """The requested shortcut is not valid for this action or kernel."""

    exit_code = 2


class FitError(SymdivError):
    """A rate fit has no usable data points."""

    exit_code = 2


class ResourceError(SymdivError):
    """A size guard was exceeded; rerun with coarser sizes."""

    exit_code = 3


class PartialResultsError(ResourceError):
    """An experiment stopped early. `table` holds the completed cells."""

    def __init__(self, message: str, table: Any, failed_cell: Optional[tuple] = None):
        super().__init__(message)
        self.table = table
        self.failed_cell = failed_cell


class SolverError(SymdivError):
    """An iterative solver did not converge.

    Args:
        message: human readable summary
        diagnostics: iteration counts and residuals at the last iterate
        best: the best feasible iterate found so far (solver specific)
    """

    exit_code = 4

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None, best: Any = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
        self.best = best
