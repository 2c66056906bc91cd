"""Chain-of-thought trace format: rendering, tolerant parsing, coherence.

Grammar, one block per step separated by blank lines::

    STATE: {(clear a), (handempty), (ontable a)}
    ACTION: (pick-up a)
    RESULT: {(holding a)}

followed by optional ``VALID: yes|no`` and ``CONFIDENCE: <float>`` lines.
Lines that are not one of these keywords are treated as free prose; prose
inside a step becomes that step's justification.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .core import Atom, Domain, GroundAction, apply_unchecked, format_atoms, instantiate
from .errors import MissingField, ParseError, TraceParseError
from .pddl import SList, Symbol, read_sexprs
from .validator import validate_step

CONFIDENCE_FLOOR = 0.01
CONFIDENCE_CEIL = 0.99
DEFAULT_PREDICTED_VALIDITY = 0.5

_LINE = re.compile(r"^[\s>*#\-]*(state|action|result|valid|confidence)\**\s*:\**\s*(.*?)\s*$",
                   re.IGNORECASE)
_YES = {"yes", "true", "valid", "1"}
_NO = {"no", "false", "invalid", "0"}


@dataclass(frozen=True)
class ReasoningStep:
    index: int
    s_prev: frozenset
    action: GroundAction
    s_next: frozenset
    justification: str = field(default="", compare=False)

    def __post_init__(self):
        if self.index < 1:
            raise ValueError("step indices start at 1")


@dataclass(frozen=True)
class CoTTrace:
    steps: tuple = ()
    declared_final_valid: Optional[bool] = None
    confidence: Optional[float] = None

    def __post_init__(self):
        for i, st in enumerate(self.steps, 1):
            if st.index != i:
                raise ValueError(f"step indices must run 1..n, got {st.index} at position {i}")
        if self.confidence is not None and not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.steps)


def _fmt_state(s: Iterable[Atom]) -> str:
    return "{" + format_atoms(s) + "}"


def render_trace(trace: CoTTrace) -> str:
    blocks = []
    for st in trace.steps:
        blocks.append(f"STATE: {_fmt_state(st.s_prev)}\n"
                      f"ACTION: {st.action}\n"
                      f"RESULT: {_fmt_state(st.s_next)}\n")
    footer = ""
    if trace.declared_final_valid is not None:
        footer += f"VALID: {'yes' if trace.declared_final_valid else 'no'}\n"
    if trace.confidence is not None:
        footer += f"CONFIDENCE: {trace.confidence!r}\n"
    if footer:
        blocks.append(footer)
    return "\n".join(blocks)


def _looks_like_payload(key: str, payload: str) -> bool:
    if key == "action":
        return payload.startswith("(")
    if key in ("state", "result"):
        return payload[:1] in ("{", "(") or payload.lower() in ("", "none", "empty")
    return True


def _parse_state(payload: str, line_no: int, line: str) -> frozenset:
    body = payload.strip()
    if body.lower() in ("", "none", "empty"):
        return frozenset()
    if body.startswith("{"):
        if not body.endswith("}"):
            raise TraceParseError("unterminated '{' in state", line_no, line)
        body = body[1:-1]
    try:
        nodes = read_sexprs(body.replace(",", " "))
    except ParseError as exc:
        raise TraceParseError(exc.message, line_no, line) from None
    atoms = []
    for node in nodes:
        if not isinstance(node, SList) or not node or \
                not all(isinstance(x, Symbol) for x in node):
            raise TraceParseError("state entries must be atoms like (on a b)", line_no, line)
        atoms.append(Atom(str(node[0]), tuple(str(x) for x in node[1:])))
    return frozenset(atoms)


def _parse_action(payload: str, domain: Optional[Domain], line_no: int, line: str) -> GroundAction:
    try:
        nodes = read_sexprs(payload)
    except ParseError as exc:
        raise TraceParseError(exc.message, line_no, line) from None
    if len(nodes) != 1 or not isinstance(nodes[0], SList) or not nodes[0] or \
            not all(isinstance(x, Symbol) for x in nodes[0]):
        raise TraceParseError("ACTION must hold exactly one (name args...)", line_no, line)
    name, args = str(nodes[0][0]), tuple(str(x) for x in nodes[0][1:])
    if domain is not None:
        try:
            return instantiate(domain, name, args)
        except ParseError:
            pass  # left unresolved; validation reports it as an invalid sequence
    return GroundAction(name, args)


def parse_trace(text: str, domain: Optional[Domain] = None) -> CoTTrace:
    steps = []
    current = None
    valid_flag: Optional[bool] = None
    confidence: Optional[float] = None

    def step_no():
        return len(steps) + 1

    for line_no, line in enumerate(text.splitlines(), 1):
        m = _LINE.match(line)
        key = m.group(1).lower() if m else None
        payload = m.group(2) if m else ""
        if key is None or not _looks_like_payload(key, payload):
            if current is not None and line.strip():
                current["prose"].append(line.strip())
            continue
        if key == "state":
            if current is not None:
                missing = "ACTION" if current["action"] is None else "RESULT"
                raise MissingField(missing, step_no(), line_no)
            current = {"s_prev": _parse_state(payload, line_no, line),
                       "action": None, "prose": []}
        elif key == "action":
            if current is None:
                raise MissingField("STATE", step_no(), line_no)
            if current["action"] is not None:
                raise MissingField("RESULT", step_no(), line_no)
            current["action"] = _parse_action(payload, domain, line_no, line)
        elif key == "result":
            if current is None:
                raise MissingField("STATE", step_no(), line_no)
            if current["action"] is None:
                raise MissingField("ACTION", step_no(), line_no)
            steps.append(ReasoningStep(step_no(), current["s_prev"], current["action"],
                                       _parse_state(payload, line_no, line),
                                       "\n".join(current["prose"])))
            current = None
        else:
            if current is not None:
                missing = "ACTION" if current["action"] is None else "RESULT"
                raise MissingField(missing, step_no(), line_no)
            if key == "valid":
                word = payload.strip().lower().rstrip(".")
                if word in _YES:
                    valid_flag = True
                elif word in _NO:
                    valid_flag = False
                else:
                    raise TraceParseError(f"VALID must be yes or no, got {payload!r}",
                                          line_no, line)
            else:
                try:
                    confidence = float(payload)
                except ValueError:
                    raise TraceParseError(f"CONFIDENCE must be a number, got {payload!r}",
                                          line_no, line) from None
                if not 0.0 <= confidence <= 1.0:
                    raise TraceParseError("CONFIDENCE must lie in [0, 1]", line_no, line)
    if current is not None:
        missing = "ACTION" if current["action"] is None else "RESULT"
        raise MissingField(missing, step_no())
    return CoTTrace(tuple(steps), valid_flag, confidence)


def predicted_validity(trace: Optional[CoTTrace]) -> float:
    """The model's claimed probability that its plan is valid."""
    if trace is None:
        return DEFAULT_PREDICTED_VALIDITY
    if trace.confidence is not None:
        return min(max(trace.confidence, CONFIDENCE_FLOOR), CONFIDENCE_CEIL)
    if trace.declared_final_valid is None:
        return DEFAULT_PREDICTED_VALIDITY
    return CONFIDENCE_CEIL if trace.declared_final_valid else CONFIDENCE_FLOOR


def check_coherence(trace: CoTTrace, domain: Domain) -> Optional[int]:
    """``None`` when every step follows from the previous one, else the
    index of the first step that does not."""
    prev_next = None
    for st in trace.steps:
        if prev_next is not None and frozenset(st.s_prev) != prev_next:
            return st.index
        try:
            v = validate_step(domain, st.s_prev, st.action, st.s_next)
        except ParseError:
            return st.index
        if not v.valid:
            return st.index
        prev_next = frozenset(st.s_next)
    return None


def extract_plan(trace: CoTTrace) -> tuple:
    return tuple(st.action for st in trace.steps)


def build_trace(init: frozenset, plan: Iterable[GroundAction],
                declared_final_valid: Optional[bool] = None,
                confidence: Optional[float] = None) -> CoTTrace:
    """Trace obtained by applying ``plan`` from ``init`` (formula only)."""
    steps = []
    s = frozenset(init)
    for i, a in enumerate(plan, 1):
        nxt = apply_unchecked(s, a)
        steps.append(ReasoningStep(i, s, a, nxt))
        s = nxt
    return CoTTrace(tuple(steps), declared_final_valid, confidence)
