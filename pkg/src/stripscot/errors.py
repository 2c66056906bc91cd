"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


class PlanningError(Exception):
    """Base class for every error raised by stripscot."""


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int
    line: int
    column: int

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError("span start must not exceed end")

    def __str__(self) -> str:
        return f"line {self.line}, column {self.column}"


class ParseError(PlanningError):
    def __init__(self, message: str, span: Optional[SourceSpan] = None,
                 expected: Optional[str] = None):
        if not message:
            raise ValueError("ParseError needs a message")
        self.message = message
        self.span = span
        self.expected = expected
        text = message
        if span is not None:
            text = f"{span}: {text}"
        if expected:
            text = f"{text} (expected {expected})"
        super().__init__(text)


class UnsupportedFeature(ParseError):
    """A PDDL construct outside the STRIPS+typing fragment."""


class UnknownType(ParseError):
    pass


class UndeclaredObject(ParseError):
    pass


class ArityMismatch(ParseError):
    pass


class UnknownAction(ParseError):
    pass


class InapplicableAction(PlanningError):
    def __init__(self, action, missing):
        self.action = action
        self.missing = tuple(missing)
        atoms = ", ".join(str(a) for a in self.missing)
        super().__init__(f"{action} is not applicable: missing {atoms}")


class TraceParseError(ParseError):
    def __init__(self, message: str, line_no: Optional[int] = None,
                 line: Optional[str] = None):
        self.line_no = line_no
        self.line = line
        if line_no is not None:
            message = f"trace line {line_no}: {message}"
        super().__init__(message)


class MissingField(TraceParseError):
    def __init__(self, field: str, step: int, line_no: Optional[int] = None):
        self.field = field
        self.step = step
        super().__init__(f"step {step} is missing its {field} line", line_no)


class SearchError(PlanningError):
    pass


class Unsolvable(SearchError):
    def __init__(self, expanded: int):
        self.expanded = expanded
        super().__init__(f"no plan exists ({expanded} states expanded)")


class LimitExceeded(SearchError):
    def __init__(self, reason: str, expanded: int, generated: int = 0):
        self.reason = reason
        self.expanded = expanded
        self.generated = generated
        super().__init__(f"search limit exceeded: {reason} "
                         f"(expanded={expanded}, generated={generated})")


class DeadEnd(SearchError):
    def __init__(self, step: int):
        self.step = step
        super().__init__(f"no applicable action at step {step}")


class Uncorruptible(PlanningError):
    def __init__(self, kind: str, reason: str):
        self.kind = kind
        self.reason = reason
        super().__init__(f"cannot apply corruption {kind!r}: {reason}")


class ContractViolation(PlanningError):
    pass


class ConfigError(PlanningError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class PromptError(PlanningError):
    pass


class BackendError(PlanningError):
    """Model backend call failed."""


class BackendTimeout(BackendError):
    pass


class BackendTransportError(BackendError):
    pass


class BackendHTTPError(BackendError):
    def __init__(self, status: int, body: str = ""):
        self.status = status
        super().__init__(f"model endpoint returned HTTP {status}")


class MalformedResponse(BackendError):
    pass


class TypeMismatch(ParseError):
    pass
