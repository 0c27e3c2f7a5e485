"""Exception hierarchy shared across the package.

The CLI maps each family to a distinct exit code, so new errors should
subclass one of ``InputError`` or ``ModelError``.
"""

from __future__ import annotations


class GuideGuardError(Exception):
    """Base class for all package errors."""


class InputError(GuideGuardError, ValueError):
    """Bad sequences, data files or configuration."""


class InvalidSymbol(InputError):
    def __init__(self, position: int, char: str):
        self.position = position
        self.char = char
        super().__init__(f"invalid nucleotide {char!r} at position {position}")


class WrongLength(InputError):
    def __init__(self, expected: int, got: int):
        self.expected = expected
        self.got = got
        super().__init__(f"expected sequence of length {expected}, got {got}")


class LengthMismatch(InputError):
    def __init__(self, a: int, b: int):
        super().__init__(f"sequence lengths differ: {a} vs {b}")


class MissingColumn(InputError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"required column {column!r} not found in header")


class TooFewRecords(InputError):
    pass


class BadK(InputError):
    pass


class BadRunLength(InputError):
    pass


class DegenerateDataset(InputError):
    """Training data with fewer than two distinct classes."""


class ConfigError(InputError):
    pass


class ShapeMismatch(GuideGuardError, ValueError):
    pass


class SingleClassInput(GuideGuardError, ValueError):
    """ROC requested on labels of only one class."""


class EmptyInput(GuideGuardError, ValueError):
    pass


class ModelError(GuideGuardError):
    """Model files that cannot be used."""


class CorruptFile(ModelError):
    pass


class VersionMismatch(ModelError):
    pass
