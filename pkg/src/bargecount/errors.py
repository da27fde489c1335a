"""Exception hierarchy shared by every module."""


class BargeCountError(Exception):
    """Base class for all library errors (CLI exit status 1)."""


class SchemaError(BargeCountError, ValueError):
    """Input file lacks a required column or is structurally malformed."""


class DomainError(BargeCountError, ValueError):
    """Inputs violate an operation's precondition."""


class ContractError(BargeCountError, ValueError):
    """Caller passed arguments inconsistent with each other."""


class NumericError(BargeCountError, ArithmeticError):
    """A numerical procedure failed (e.g. singular linear system)."""
