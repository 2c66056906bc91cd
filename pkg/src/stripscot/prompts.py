"""Prompt templates for Phase-1 examples and the Phase-2 CoT loop.

Placeholders are ``{domain}``, ``{problem}``, ``{prior_trace}`` and
``{feedback}``; any other braces are literal text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping

from .errors import PromptError

PLACEHOLDERS = ("domain", "problem", "prior_trace", "feedback")
_FIELD = re.compile(r"\{(" + "|".join(PLACEHOLDERS) + r")\}")

TEMPLATE_NAMES = ("phase1_correct", "phase1_incorrect", "cot_generate",
                  "cot_feedback_binary", "cot_feedback_detailed")

TRACE_FORMAT_INSTRUCTIONS = """\
Answer with your reasoning in this exact format, one block per action:

STATE: {(atom args), ...}      <- every fact true before the action
ACTION: (action-name args)
RESULT: {(atom args), ...}     <- every fact true after the action

Separate blocks with a blank line. Check that every precondition of the
action holds in STATE, then build RESULT by removing the delete effects and
adding the add effects; all other facts carry over unchanged. The first
STATE must be the initial state and each STATE must equal the previous
RESULT. After the last block write
VALID: yes or VALID: no
CONFIDENCE: <probability between 0 and 1 that your plan is valid>
"""


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    body: str

    @property
    def placeholders(self) -> tuple:
        return tuple(dict.fromkeys(_FIELD.findall(self.body)))


_BODIES = {
    "phase1_correct": """\
You are given a planning domain and problem in PDDL together with a plan.
Explain, action by action, why each action is applicable (which
preconditions hold) and how its effects change the state, and confirm
that the final state satisfies the goal.

Domain:
{domain}
Problem:
{problem}
Plan and verification:
{prior_trace}
Explanation:
{feedback}
""",
    "phase1_incorrect": """\
You are given a planning domain and problem in PDDL together with a plan
that is NOT valid. Identify the first error: an unsatisfied precondition,
an incorrectly applied effect, a violated frame axiom (a fact changed that
the action does not touch), or a goal that is not reached.

Domain:
{domain}
Problem:
{problem}
Plan and claimed states:
{prior_trace}
Explanation:
{feedback}
""",
    "cot_generate": """\
Solve the following planning problem. Reason step by step about the state,
the applicability of each action and its effects.

Domain:
{domain}
Problem:
{problem}
""",
    "cot_feedback_binary": """\
Solve the following planning problem. Reason step by step about the state,
the applicability of each action and its effects.

Domain:
{domain}
Problem:
{problem}
Your previous attempt:
{prior_trace}
A plan validator judged that attempt: {feedback}
Produce a corrected attempt.
""",
    "cot_feedback_detailed": """\
Solve the following planning problem. Reason step by step about the state,
the applicability of each action and its effects.

Domain:
{domain}
Problem:
{problem}
Your previous attempt:
{prior_trace}
A plan validator reported:
{feedback}
Fix the reported error and produce a corrected attempt.
""",
}

TEMPLATES = {name: PromptTemplate(name, body) for name, body in _BODIES.items()}


def get_template(name: str) -> PromptTemplate:
    try:
        return TEMPLATES[name]
    except KeyError:
        raise PromptError(f"unknown prompt template {name!r}") from None


def render_prompt(template, bindings: Mapping[str, str]) -> str:
    """Substitute placeholders verbatim; CoT prompts get the trace grammar
    appended."""
    if isinstance(template, str):
        template = get_template(template)
    missing = [p for p in template.placeholders if p not in bindings]
    if missing:
        raise PromptError(f"template {template.name} needs bindings for {missing}")
    text = _FIELD.sub(lambda m: str(bindings[m.group(1)]), template.body)
    if template.name.startswith("cot_"):
        text = text.rstrip("\n") + "\n\n" + TRACE_FORMAT_INSTRUCTIONS
    return text
