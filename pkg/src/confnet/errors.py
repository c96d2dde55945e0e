"""Exception types shared across the package.

StructureError: malformed values (empty bins, bad indices, overlapping spans).
ContractError: a stated precondition was violated (unnormalized bin, path
    count over the declared limit, zero-length reference).
FormatError: unparseable file content; message carries path and line number.
"""


class ConfnetError(ValueError):
    """Base class for all errors raised by this package."""


class StructureError(ConfnetError):
    pass


class ContractError(ConfnetError):
    pass


class FormatError(ConfnetError):
    pass
