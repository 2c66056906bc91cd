"""Step-, plan- and trace-level validation with binary/detailed feedback.

Check precedence is fixed: structural problems (unknown or ill-typed
actions, broken state chaining) first, then simulation in order, where the
first failing step decides. Within a step: preconditions, then effects,
then the goal (final step only).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Union

from .core import (
    Domain,
    GroundAction,
    Problem,
    format_atoms,
    instantiate,
    missing_preconditions,
    satisfies_goal,
)
from .errors import ContractViolation, ParseError


class StepStatus(str, Enum):
    VALID = "valid"
    PRECONDITION_VIOLATION = "precondition_violation"
    EFFECT_MISMATCH = "effect_mismatch"
    GOAL_FAILURE = "goal_failure"


class ErrorClass(str, Enum):
    PRECONDITION_VIOLATION = "precondition_violation"
    INCORRECT_EFFECT = "incorrect_effect"
    GOAL_NOT_ACHIEVED = "goal_not_achieved"
    INVALID_SEQUENCE = "invalid_sequence"


# order used by classify_error and by report tables
ERROR_CLASSES = (
    ErrorClass.PRECONDITION_VIOLATION,
    ErrorClass.INCORRECT_EFFECT,
    ErrorClass.GOAL_NOT_ACHIEVED,
    ErrorClass.INVALID_SEQUENCE,
)


@dataclass(frozen=True)
class StepVerdict:
    index: int
    action: GroundAction
    status: StepStatus
    missing_preconditions: tuple
    expected_state: frozenset
    claimed_state: frozenset
    missing: frozenset  # expected but not claimed
    extra: frozenset  # claimed but not expected
    unmet_goals: tuple = ()

    @property
    def state_diff(self) -> tuple:
        return self.missing, self.extra

    @property
    def valid(self) -> bool:
        return self.status is StepStatus.VALID


@dataclass(frozen=True)
class PlanVerdict:
    valid: bool
    first_failure_index: Optional[int]
    per_step: tuple
    final_state: frozenset
    error_class: Optional[ErrorClass] = None
    unmet_goals: tuple = ()
    sequence_error: Optional[str] = None
    goal: frozenset = frozenset()


@dataclass(frozen=True)
class Feedback:
    mode: str
    text: str
    verdict: Union[StepVerdict, PlanVerdict]


def validate_step(domain: Domain, s_prev: frozenset, action: GroundAction,
                  s_claimed: frozenset, goal: Optional[Iterable] = None,
                  is_final: bool = False, index: int = 1) -> StepVerdict:
    """Check one claimed transition ``s_prev --action--> s_claimed``.

    The action is re-grounded from ``domain`` by name and arguments, so
    UnknownAction / ArityMismatch propagate. For an inapplicable action the
    expected state is ``s_prev`` (the action is treated as not executed).
    """
    ga = instantiate(domain, action.name, action.args)
    missing = missing_preconditions(s_prev, ga)
    expected = s_prev if missing else (s_prev - ga.dele) | ga.add
    s_claimed = frozenset(s_claimed)
    lost = expected - s_claimed
    extra = s_claimed - expected
    unmet: tuple = ()
    if missing:
        status = StepStatus.PRECONDITION_VIOLATION
    elif lost or extra:
        status = StepStatus.EFFECT_MISMATCH
    else:
        status = StepStatus.VALID
        if is_final and goal is not None:
            unmet = tuple(sorted(g for g in goal if g not in s_claimed))
            if unmet:
                status = StepStatus.GOAL_FAILURE
    return StepVerdict(index, ga, status, missing, expected, s_claimed,
                       lost, extra, unmet)


def _structural_failure(message: str, index: int, state: frozenset, goal) -> PlanVerdict:
    return PlanVerdict(False, index, (), state, ErrorClass.INVALID_SEQUENCE,
                       sequence_error=message, goal=frozenset(goal))


def sequence_failure(problem: Problem, message: str, index: Optional[int] = None) -> PlanVerdict:
    """Verdict for output that cannot be read as an action sequence at all."""
    return _structural_failure(message, index, problem.init, problem.goal)


def _resolve(domain: Domain, problem: Problem, actions) -> Union[list, tuple]:
    """Ground every action against the problem; ``(index, message)`` on failure."""
    objects = problem.object_types
    out = []
    for i, a in enumerate(actions, 1):
        try:
            out.append(instantiate(domain, a.name, a.args, objects))
        except ParseError as exc:
            return i, f"step {i}: {a}: {exc.message}"
    return out


def _finish(steps: list, state: frozenset, problem: Problem, check_goal: bool) -> PlanVerdict:
    last = steps[-1] if steps else None
    if last is not None and last.status in (StepStatus.PRECONDITION_VIOLATION,
                                            StepStatus.EFFECT_MISMATCH):
        cls = (ErrorClass.PRECONDITION_VIOLATION
               if last.status is StepStatus.PRECONDITION_VIOLATION
               else ErrorClass.INCORRECT_EFFECT)
        return PlanVerdict(False, last.index, tuple(steps), state, cls, goal=problem.goal)
    if check_goal and not satisfies_goal(state, problem.goal):
        unmet = tuple(sorted(g for g in problem.goal if g not in state))
        return PlanVerdict(False, last.index if last else None, tuple(steps), state,
                           ErrorClass.GOAL_NOT_ACHIEVED, unmet, goal=problem.goal)
    return PlanVerdict(True, None, tuple(steps), state, goal=problem.goal)


def validate_plan(domain: Domain, problem: Problem, plan: Iterable[GroundAction],
                  check_goal: bool = True) -> PlanVerdict:
    """Simulate ``plan`` from the initial state (VAL semantics)."""
    resolved = _resolve(domain, problem, plan)
    if isinstance(resolved, tuple):
        return _structural_failure(resolved[1], resolved[0], problem.init, problem.goal)
    s = problem.init
    steps = []
    goal = problem.goal if check_goal else None
    for i, ga in enumerate(resolved, 1):
        missing = missing_preconditions(s, ga)
        nxt = s if missing else (s - ga.dele) | ga.add
        v = validate_step(domain, s, ga, nxt, goal, i == len(resolved), i)
        steps.append(v)
        if v.status is StepStatus.PRECONDITION_VIOLATION:
            return _finish(steps, s, problem, check_goal)
        s = nxt
    return _finish(steps, s, problem, check_goal)


def validate_trace(domain: Domain, problem: Problem, trace) -> PlanVerdict:
    """Validate a claimed state-action-state trace.

    Besides plan validity, every claimed resulting state must equal the
    simulated one, and each step must start where the previous one ended
    (the first from the initial state).
    """
    steps = list(trace.steps)
    resolved = _resolve(domain, problem, [st.action for st in steps])
    if isinstance(resolved, tuple):
        return _structural_failure(resolved[1], resolved[0], problem.init, problem.goal)
    prev_claim = problem.init
    for i, st in enumerate(steps, 1):
        if frozenset(st.s_prev) != prev_claim:
            where = "the initial state" if i == 1 else f"the result of step {i - 1}"
            return _structural_failure(
                f"step {i}: starting state does not match {where}", i,
                problem.init, problem.goal)
        prev_claim = frozenset(st.s_next)
    s = problem.init
    verdicts = []
    for i, (st, ga) in enumerate(zip(steps, resolved), 1):
        v = validate_step(domain, s, ga, st.s_next, problem.goal, i == len(steps), i)
        verdicts.append(v)
        if v.status in (StepStatus.PRECONDITION_VIOLATION, StepStatus.EFFECT_MISMATCH):
            return _finish(verdicts, s, problem, True)
        s = v.expected_state
    return _finish(verdicts, s, problem, True)


def classify_error(verdict: PlanVerdict) -> ErrorClass:
    """Single error class for an invalid verdict.

    Precedence: invalid_sequence > precondition_violation >
    incorrect_effect > goal_not_achieved.
    """
    if verdict.valid:
        raise ContractViolation("classify_error called on a valid verdict")
    if verdict.sequence_error is not None:
        return ErrorClass.INVALID_SEQUENCE
    statuses = {v.status for v in verdict.per_step}
    if StepStatus.PRECONDITION_VIOLATION in statuses:
        return ErrorClass.PRECONDITION_VIOLATION
    if StepStatus.EFFECT_MISMATCH in statuses:
        return ErrorClass.INCORRECT_EFFECT
    return ErrorClass.GOAL_NOT_ACHIEVED


def _atoms(atoms, sort=True) -> str:
    return format_atoms(atoms, sort) if atoms else "none"


def _step_line(v: StepVerdict) -> str:
    head = f"step {v.index}: action {v.action}"
    if v.status is StepStatus.PRECONDITION_VIOLATION:
        return f"{head}: missing preconditions: {_atoms(v.missing_preconditions, sort=False)}"
    if v.status is StepStatus.EFFECT_MISMATCH:
        return (f"{head}: incorrect effects: missing atoms: {_atoms(v.missing)}; "
                f"unexpected atoms: {_atoms(v.extra)}")
    if v.status is StepStatus.GOAL_FAILURE:
        return f"{head}: goal not achieved: unmet goal atoms: {_atoms(v.unmet_goals)}"
    a = v.action
    return (f"{head}: preconditions satisfied: {_atoms(a.pre, sort=False)}; "
            f"adds: {_atoms(a.add)}; deletes: {_atoms(a.dele)}")


def detailed_text(verdict: Union[StepVerdict, PlanVerdict]) -> str:
    if isinstance(verdict, StepVerdict):
        return ("valid\n" if verdict.valid else "invalid\n") + _step_line(verdict)
    if verdict.valid:
        lines = ["valid"]
        lines.extend(_step_line(v) for v in verdict.per_step)
        lines.append(f"goal satisfied: {_atoms(verdict.goal)}")
        return "\n".join(lines)
    cls = classify_error(verdict)
    if cls is ErrorClass.INVALID_SEQUENCE:
        detail = f"invalid sequence: {verdict.sequence_error}"
    elif cls is ErrorClass.GOAL_NOT_ACHIEVED:
        detail = f"goal not achieved: unmet goal atoms: {_atoms(verdict.unmet_goals)}"
    else:
        detail = _step_line(verdict.per_step[-1])
    return f"invalid\n{detail}"


def render_feedback(verdict: Union[StepVerdict, PlanVerdict], mode: str = "detailed") -> Feedback:
    if mode == "binary":
        return Feedback(mode, "valid" if verdict.valid else "invalid", verdict)
    if mode == "detailed":
        return Feedback(mode, detailed_text(verdict), verdict)
    raise ValueError(f"unknown feedback mode {mode!r}")
