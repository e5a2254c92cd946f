"""Exception hierarchy shared by all modules."""
from __future__ import annotations

from typing import Optional


class MixtagError(Exception):
    """Base class for every error raised by this package."""


class FormatError(MixtagError, ValueError):
    """Malformed input text (corpus, lexicon, template or model file)."""

    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        self.message = message
        self.line = line
        self.path = path
        super().__init__(str(self))

    def __str__(self) -> str:
        where = ""
        if self.path is not None:
            where = f"{self.path}:{self.line}: " if self.line is not None else f"{self.path}: "
        elif self.line is not None:
            where = f"line {self.line}: "
        return where + self.message

    def with_path(self, path: str) -> "FormatError":
        return FormatError(self.message, self.line, path)


class ShapeError(MixtagError, ValueError):
    """Predictions and references disagree in shape."""

    def __init__(self, message: str, index: Optional[int] = None):
        self.index = index
        super().__init__(message)


class LayoutError(MixtagError, ValueError):
    """A template references a column the observation matrix does not have."""


class EmptyLexiconError(MixtagError, ValueError):
    pass


class ConfigError(MixtagError, ValueError):
    pass


class NumericError(MixtagError, ArithmeticError):
    pass
