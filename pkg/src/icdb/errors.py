"""Exception hierarchy shared across the icdb packages."""


class IcdbError(Exception):
    """Base class for all icdb errors."""


class SchemeMismatchError(IcdbError):
    """A code produced under one scheme was checked under another."""


class MessageTooLargeError(IcdbError):
    """Message exceeds the configured maximum size."""


class CodeFormatError(IcdbError):
    """Code bytes are structurally malformed (wrong length, bad encoding).

    Distinct from a verification returning False: a malformed code cannot
    even be checked.
    """


class UnsupportedOperationError(IcdbError):
    """Operation not defined for the scheme (e.g. decrypting a MAC)."""


class KeyFileError(IcdbError):
    """Key file is malformed or inconsistent with its scheme."""


class IcrlStateError(IcdbError):
    """Serial allocation/revocation contract violated."""


class SerialSpaceExhausted(IcrlStateError):
    """The u64 serial allocator has no serials left."""


class IcrlFileError(IcdbError):
    """ICRL file is malformed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SqlError(IcdbError):
    """Base class for SQL subset errors."""


class SqlSyntaxError(SqlError):
    """Input does not match the subset grammar."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (at byte {offset})")


class UnsupportedSqlError(SqlError):
    """Statement is valid SQL but outside the supported subset."""


class BindError(SqlError):
    """Column or table reference cannot be resolved (unknown or ambiguous)."""


class SchemaError(IcdbError):
    """Table schema violates a structural invariant."""


class SchemaMismatchError(IcdbError):
    """Query requirements do not line up with the ICDB schema."""


class ConversionError(IcdbError):
    """Data-file conversion failed."""


class StoreError(IcdbError):
    """Embedded store execution error."""


class ConstraintViolation(StoreError):
    """Primary-key uniqueness violated."""


class ContractError(IcdbError):
    """An API was called in a way its contract forbids."""
