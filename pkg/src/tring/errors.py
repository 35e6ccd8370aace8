"""Exception types shared across the package.

Argument and domain violations raise the builtin ValueError, index
violations raise IndexError, and non-finite numeric input raises
FloatingPointError.  The two failure modes without a natural builtin
get their own classes here.
"""


class CapacityError(RuntimeError):
    """An operation would materialize more data than the configured budget."""


class FormatError(ValueError):
    """A binary or JSON input file violates its documented format."""
