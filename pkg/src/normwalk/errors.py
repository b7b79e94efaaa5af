"""Exception hierarchy shared by all normwalk modules.

The CLI maps these onto exit codes: UsageError -> 1, VerificationError -> 2,
ResourceError -> 3.
"""


class NormwalkError(Exception):
    """Base class for all package errors."""


class UsageError(NormwalkError):
    """Invalid argument, precondition violation, or unsupported combination."""


class VerificationError(NormwalkError):
    """A self-check (oracle equivalence, consistency report) failed."""


class ResourceError(NormwalkError):
    """A computation would exceed the declared memory/time budget."""
