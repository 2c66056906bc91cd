"""STRIPS planning toolkit for training and checking LLM planners.

Core pieces: a PDDL reader/printer, a plan and trace validator, a BFS
oracle planner, chain-of-thought trace handling, dataset generators, the
training losses and a generate/validate/re-prompt loop.
"""

from .core import (
    Atom,
    Domain,
    GroundAction,
    Problem,
    apply,
    applicable,
    atom,
    ground,
    satisfies_goal,
    simulate,
    state,
    state_distance,
)
from .errors import ParseError, PlanningError
from .losses import LossWeights, loss_feedback, loss_final, loss_plan, loss_reasoning, loss_step
from .pddl import parse_domain, parse_plan, parse_problem, print_domain, print_plan, print_problem
from .planner import SearchLimits, solve
from .trace import CoTTrace, ReasoningStep, parse_trace, render_trace
from .validator import ErrorClass, StepStatus, classify_error, validate_plan, validate_step, validate_trace

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "Domain",
    "GroundAction",
    "Problem",
    "apply",
    "applicable",
    "atom",
    "ground",
    "satisfies_goal",
    "simulate",
    "state",
    "state_distance",
    "ParseError",
    "PlanningError",
    "LossWeights",
    "loss_feedback",
    "loss_final",
    "loss_plan",
    "loss_reasoning",
    "loss_step",
    "parse_domain",
    "parse_plan",
    "parse_problem",
    "print_domain",
    "print_plan",
    "print_problem",
    "SearchLimits",
    "solve",
    "CoTTrace",
    "ReasoningStep",
    "parse_trace",
    "render_trace",
    "ErrorClass",
    "StepStatus",
    "classify_error",
    "validate_plan",
    "validate_step",
    "validate_trace",
]
