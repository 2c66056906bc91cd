"""Plan-accuracy evaluation: one generation per problem, no feedback."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .backends import GenerationParams
from .config import LoopConfig
from .errors import BackendError
from .loop import BACKEND_FAILURE, as_task, assess_completion, call_backend
from .prompts import render_prompt
from .validator import ERROR_CLASSES, ErrorClass, classify_error, sequence_failure

CLASS_NAMES = tuple(c.value for c in ERROR_CLASSES)


@dataclass(frozen=True)
class TaskOutcome:
    problem_id: str
    valid: bool
    error_class: Optional[str] = None
    backend_failure: Optional[str] = None


@dataclass
class EvalResult:
    domain: str
    total: int
    valid: int
    class_counts: dict
    backend_failures: int = 0
    outcomes: list = field(default_factory=list)

    def __post_init__(self):
        if self.total < 1:
            raise ValueError("an evaluation needs at least one task")
        if sum(self.class_counts.values()) != self.total - self.valid:
            raise ValueError("class counts must add up to the number of failures")

    @property
    def accuracy(self) -> float:
        return 100.0 * self.valid / self.total

    @property
    def failure_rate(self) -> float:
        return 100.0 * (self.total - self.valid) / self.total

    @property
    def class_percents(self) -> dict:
        return {c: 100.0 * self.class_counts.get(c, 0) / self.total for c in CLASS_NAMES}

    def to_dict(self) -> dict:
        return {
            "domain": self.domain,
            "total": self.total,
            "valid": self.valid,
            "accuracy": self.accuracy,
            "class_counts": {c: self.class_counts.get(c, 0) for c in CLASS_NAMES},
            "class_percents": self.class_percents,
            "backend_failures": self.backend_failures,
            "outcomes": [vars(o) for o in self.outcomes],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvalResult":
        return cls(data["domain"], data["total"], data["valid"], dict(data["class_counts"]),
                   data.get("backend_failures", 0),
                   [TaskOutcome(**o) for o in data.get("outcomes", [])])

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def evaluate(backend, problems: Sequence, cfg: LoopConfig = LoopConfig(),
             domain_name: str = "") -> EvalResult:
    """Generate once per problem and validate; nothing is sent back."""
    tasks = [as_task(p) for p in problems]
    if not tasks:
        raise ValueError("evaluate needs at least one problem")
    params = GenerationParams(cfg.temperature)

    def one(task) -> TaskOutcome:
        prompt = render_prompt("cot_generate", {"domain": task.domain_text,
                                                "problem": task.problem_text})
        try:
            text = call_backend(backend, prompt, params, task, 1, cfg.max_retries)
        except BackendError as exc:
            failure = f"{type(exc).__name__}: {exc}"
            v = sequence_failure(task.problem, f"{BACKEND_FAILURE}: {failure}")
            return TaskOutcome(task.problem_id, False, classify_error(v).value, failure)
        _, v = assess_completion(task.domain, task.problem, text)
        return TaskOutcome(task.problem_id, v.valid,
                           None if v.valid else classify_error(v).value)

    workers = 1 if getattr(backend, "serial", False) else min(cfg.concurrency, len(tasks))
    if workers == 1:
        outcomes = [one(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(one, tasks))
    outcomes.sort(key=lambda o: o.problem_id)
    counts = {c: sum(o.error_class == c for o in outcomes) for c in CLASS_NAMES}
    name = domain_name or tasks[0].domain.name
    return EvalResult(name, len(outcomes), sum(o.valid for o in outcomes), counts,
                      sum(o.backend_failure is not None for o in outcomes), outcomes)


TOTAL_ROW = "total failure rate"


def error_breakdown(result: EvalResult) -> dict:
    """Percent of all tasks failing in each error class, plus the total row."""
    rows = dict(result.class_percents)
    rows[TOTAL_ROW] = result.failure_rate
    return rows


_LABELS = {
    ErrorClass.PRECONDITION_VIOLATION.value: "precondition violation",
    ErrorClass.INCORRECT_EFFECT.value: "incorrect effect",
    ErrorClass.GOAL_NOT_ACHIEVED.value: "goal not achieved",
    ErrorClass.INVALID_SEQUENCE.value: "invalid sequence",
    TOTAL_ROW: TOTAL_ROW,
}


def format_breakdown(results: Sequence[EvalResult]) -> str:
    """Aligned text table, one column per evaluated domain, one decimal."""
    results = list(results)
    tables = [error_breakdown(r) for r in results]
    header = ["error type"] + [r.domain for r in results]
    body = [[_LABELS[k]] + [f"{t[k]:.1f}" for t in tables] for k in (*CLASS_NAMES, TOTAL_ROW)]
    body.append(["accuracy"] + [f"{r.accuracy:.1f}" for r in results])
    widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]

    def line(row):
        return "  ".join(cell.ljust(widths[0]) if i == 0 else cell.rjust(widths[i])
                         for i, cell in enumerate(row)).rstrip()

    rule = "  ".join("-" * w for w in widths)
    return "\n".join([line(header), rule] + [line(r) for r in body]) + "\n"
