"""Exception hierarchy shared by all modules."""


class MDLError(Exception):
    """Base class for domain errors (mapped to exit code 1 by the CLI)."""


class InvalidArgumentError(MDLError, ValueError):
    pass


class InvalidStateError(MDLError, ValueError):
    """A matrix or vector that is not a physical quantum state."""


class InvalidProtocolError(MDLError, ValueError):
    """Tomography projectors that are not informationally complete."""


class DegenerateDataError(MDLError):
    """Counts that carry no information (zero totals, empty datasets)."""


class ParseError(MDLError, ValueError):
    """Malformed input file. The message names the offending row and field."""

    def __init__(self, message, row=None, field=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if field is not None:
            where.append(f"field {field!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.field = field
