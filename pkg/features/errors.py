"""
Errors - exception hierarchy shared by all planlab modules

Library code raises these; only the command line catches them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


class PlanLabError(Exception):
    """Base class for every error raised by planlab"""


# Planning model

class DomainError(PlanLabError):
    """Malformed domain, schema or instance"""


class PlanError(PlanLabError):
    """Plan that does not fit its instance"""


class UnknownSchema(PlanError):
    pass


class UnknownObject(PlanError):
    pass


class ArityMismatch(PlanError):
    pass


class ConflictingEffects(PlanLabError):
    """Two triggered effect sets assert p and not p in the same step"""


class ActionNotApplicable(PlanLabError):
    pass


class PlanNotExecutable(PlanLabError):
    """Raised by operations that require an executable plan"""

    def __init__(self, verdict):
        super().__init__(f"plan is not executable: {verdict}")
        self.verdict = verdict


# Parsing

@dataclass(frozen=True)
class SourceSpan:
    """Byte offsets plus 1-based line/column of a piece of source text"""
    start: int
    end: int
    line: int
    column: int

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError("span start after end")


class ParseError(PlanLabError):
    """Syntax or reference error in a planlab text file"""

    def __init__(self, message: str, span: Optional[SourceSpan] = None, expected: Optional[str] = None):
        if not message:
            message = "parse error"
        super().__init__(message)
        self.message = message
        self.span = span
        self.expected = expected
        self.source = None

    def __str__(self):
        text = self.message
        if self.span is not None:
            text = f"{self.span.line}:{self.span.column}: {text}"
        if self.expected:
            text += f" (expected {self.expected})"
        if self.source:
            text = f"{self.source}:{text}"
        return text


class UnknownPredicate(ParseError):
    pass


class UnknownObjectReference(ParseError):
    pass


# C*-RASP

class CraspError(PlanLabError):
    pass


class TypeCheckError(CraspError):
    """Program violates the sort or reference discipline"""

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SortError(TypeCheckError):
    pass


class ForwardReference(TypeCheckError):
    pass


class UnknownSigmaSymbol(TypeCheckError):
    pass


class BandwidthExceeded(TypeCheckError):
    pass


class EmptyMatch(TypeCheckError):
    pass


class NonBooleanOutput(TypeCheckError):
    pass


class EmptyProgram(TypeCheckError):
    pass


class EmptyInput(CraspError):
    pass


class IntegerOverflow(CraspError):
    pass


class AlphabetTooLarge(CraspError):
    pass


# Compilation

class CompileError(PlanLabError):
    pass


class NotSupported(CompileError):
    """Verification task outside what the compilers can express"""


class ObjectCollision(CompileError):
    pass


# Dataset generation

class GenerationError(PlanLabError):
    pass


class RetryExhausted(GenerationError):
    pass


class CorruptionNotApplicable(GenerationError):
    pass
