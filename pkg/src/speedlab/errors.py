"""Exception hierarchy shared by every speedlab module."""

from __future__ import annotations

import os

DEFAULT_HORIZON_CAP = 10**6


class SpeedlabError(Exception):
    """Base class for all library errors."""


class PreconditionError(SpeedlabError, ValueError):
    """Input does not satisfy the documented precondition of an operation."""


class HorizonExhausted(SpeedlabError):
    """A bounded search ran past its horizon without finding a witness."""

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.context = context


class InvariantViolation(SpeedlabError):
    """A condition that the underlying argument guarantees did not hold.

    Seeing this almost always means an implementation bug, not bad input.
    """


def horizon_cap() -> int:
    """Global guard on the number of probes a single search may make.

    Read from ``SPEEDLAB_HORIZON_CAP`` on every call so tests and the CLI can
    tighten it without reloading modules.
    """
    raw = os.environ.get("SPEEDLAB_HORIZON_CAP")
    if not raw:
        return DEFAULT_HORIZON_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise PreconditionError(f"SPEEDLAB_HORIZON_CAP must be an integer, got {raw!r}")
    if cap < 1:
        raise PreconditionError("SPEEDLAB_HORIZON_CAP must be positive")
    return cap


def search_limit(horizon: int) -> int:
    return min(horizon, horizon_cap())
