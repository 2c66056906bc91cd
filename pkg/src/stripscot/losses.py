"""Reasoning-chain and final-plan losses, computed as metrics.

No gradients here: these are the quantities a trainer would minimise,
reported over emitted datasets.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Sequence, Union

from .validator import StepStatus, StepVerdict


@dataclass(frozen=True)
class LossWeights:
    alpha_precond: float = 1.0
    alpha_effect: float = 1.0
    alpha_goal: float = 1.5
    lambda_feedback: float = 0.1
    beta: float = 2.0
    alpha: float = 0.5
    bce_epsilon: float = 1e-6

    def __post_init__(self):
        for f, v in asdict(self).items():
            if v < 0:
                raise ValueError(f"{f} must be nonnegative")
        if not 0 < self.bce_epsilon < 0.5:
            raise ValueError("bce_epsilon must lie in (0, 0.5)")


DEFAULT_WEIGHTS = LossWeights()


def _status(f) -> StepStatus:
    if isinstance(f, StepVerdict):
        return f.status
    if isinstance(f, Mapping):
        return StepStatus(f["status"])
    return StepStatus(f)


def loss_feedback(f: Union[StepVerdict, Mapping, str], w: LossWeights = DEFAULT_WEIGHTS) -> float:
    status = _status(f)
    if status is StepStatus.VALID:
        return 0.0
    if status is StepStatus.PRECONDITION_VIOLATION:
        return w.alpha_precond
    if status is StepStatus.EFFECT_MISMATCH:
        return w.alpha_effect
    return w.alpha_goal


def _state_size_diff(feedback: Mapping) -> int:
    diff = feedback["state_diff"]
    return len(diff["missing"]) + len(diff["extra"])


def loss_step(rec, w: LossWeights = DEFAULT_WEIGHTS) -> float:
    """State distance to the expected state plus weighted feedback loss.

    ``rec`` is a ReasoningRecord (its stored feedback supplies the state
    diff) or a StepVerdict.
    """
    if isinstance(rec, StepVerdict):
        d_state = len(rec.missing) + len(rec.extra)
        return d_state + w.lambda_feedback * loss_feedback(rec, w)
    return _state_size_diff(rec.feedback) + w.lambda_feedback * loss_feedback(rec.feedback, w)


def loss_reasoning(records: Sequence, w: LossWeights = DEFAULT_WEIGHTS) -> float:
    if not records:
        raise ValueError("loss_reasoning needs a nonempty dataset")
    return math.fsum(loss_step(r, w) for r in records) / len(records)


def bce(v: int, v_hat: float, epsilon: float = DEFAULT_WEIGHTS.bce_epsilon) -> float:
    p = min(max(v_hat, epsilon), 1.0 - epsilon)
    return -(v * math.log(p) + (1 - v) * math.log(1.0 - p))


def loss_plan(rec, w: LossWeights = DEFAULT_WEIGHTS) -> float:
    """Fixed penalty for invalid plans plus weighted validity BCE.

    ``rec`` needs ``v`` (0/1) and ``v_hat`` attributes.
    """
    penalty = w.beta if rec.v == 0 else 0.0
    return penalty + w.alpha * bce(rec.v, rec.v_hat, w.bce_epsilon)


def loss_final(records: Sequence, w: LossWeights = DEFAULT_WEIGHTS) -> float:
    if not records:
        raise ValueError("loss_final needs a nonempty dataset")
    return math.fsum(loss_plan(r, w) for r in records) / len(records)


@dataclass
class LossReport:
    step_losses: list = field(default_factory=list)
    plan_losses: list = field(default_factory=list)
    loss_reasoning: float | None = None
    loss_final: float | None = None
    step_status_counts: dict = field(default_factory=dict)
    error_class_counts: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "LossReport":
        return cls(**data)


def loss_report(reasoning: Iterable = (), final: Iterable = (),
                w: LossWeights = DEFAULT_WEIGHTS) -> LossReport:
    reasoning, final = list(reasoning), list(final)
    steps = [loss_step(r, w) for r in reasoning]
    plans = [loss_plan(r, w) for r in final]
    statuses = Counter(_status(r if isinstance(r, StepVerdict) else r.feedback).value
                       for r in reasoning)
    classes = Counter(r.error_class for r in final if r.error_class)
    return LossReport(
        steps, plans,
        math.fsum(steps) / len(steps) if steps else None,
        math.fsum(plans) / len(plans) if plans else None,
        dict(sorted(statuses.items())), dict(sorted(classes.items())),
    )
